//! Penalized simulation of SPDEs reflected in the closed unit ball of a
//! Hilbert space `H`, together with the numerical audits that go with it.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; parallel execution is injected through
//! [`exec::Executor`] by the caller.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod fourier;
pub mod hilbert;
pub mod hypotheses;
pub mod localtime;
pub mod models;
pub mod montecarlo;
pub mod penalize;
pub mod rng;
pub mod tamednse;

pub use error::{Error, Result};
pub use hilbert::{Layout, SpaceSpec, SpectralField, VNorm};


pub use models::{Drift, ModelConstants, ModelSpec, NoiseBasis, NoiseSpec};
pub use penalize::{Method, PathRecord, SchemeConfig};
pub use localtime::{ReflectionSummary, TestPath};
pub use hypotheses::{AuditReport, FieldSampler, Hypothesis};
