//! Drift/diffusion pairs `(A, B)` with the constants they declare for the
//! hemicontinuity, local monotonicity, coercivity, growth and Lipschitz
//! conditions.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{check_len, Error, Result};
use crate::hilbert::{SpaceSpec, SpectralField};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

mod allen_cahn;
mod noise;
mod oracle;
mod p_laplacian;
pub mod registry;

pub use allen_cahn::AllenCahn;
pub use noise::{unit_clamp, NoiseBasis, NoiseSpec};
pub use oracle::{oracle_drift_1d, LinearDiagonal, OracleDrift};
pub use p_laplacian::PLaplacian;

/// The drift operator `A: [0,T] × V → V*`.
///
/// Outputs are `L²` coefficients of the dual element; pair them with
/// [`SpaceSpec::dual_pairing`]. All implemented drifts are autonomous and
/// ignore `t`.
pub trait Drift: Send + Sync + fmt::Debug {
    fn apply(&self, t: f64, u: &[f64]) -> Result<Vec<f64>>;

    /// Diagonal linear part integrated exactly by the steppers.
    fn linear_part(&self) -> Option<&[f64]> {
        None
    }

    /// `A(t,u)` minus the linear part.
    fn nonlinear(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut a = self.apply(t, u)?;
        if let Some(l) = self.linear_part() {
            for ((a, l), u) in a.iter_mut().zip(l).zip(u) {
                *a -= l * u;
            }
        }
        Ok(a)
    }

    /// Declared weight `ρ(u)` of the local monotonicity condition.
    fn rho(&self, _space: &SpaceSpec, _u: &[f64]) -> f64 {
        0.0
    }

    /// Declared weight `η(v)` of the local monotonicity condition.
    fn eta(&self, _space: &SpaceSpec, _v: &[f64]) -> f64 {
        0.0
    }

    /// Maps a raw coefficient vector onto the admissible subspace.
    fn admissible(&self, u: Vec<f64>) -> Vec<f64> {
        u
    }

    /// Unit-`H`-norm direction used for default initial conditions.
    fn initial_direction(&self, space: &SpaceSpec) -> SpectralField {
        let e0 = SpectralField::unit(space.len(), 0);
        e0.scaled(1.0 / space.h_weights()[0].sqrt())
    }
}

/// Declared exponents and constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    pub alpha: f64,
    /// Growth exponent of the `H`-norm factor in the growth bound.
    pub beta: f64,
    /// Exponent of the `H`-norm factor bounding `ρ`, `η`.
    pub gamma: f64,
    pub c0: f64,
    /// Coercivity constant.
    pub c: f64,
    /// Declared constant of the growth bound.
    pub growth: f64,
    /// Declared constant `C` in `|ρ(u)| + |η(u)| ≤ C(1+‖u‖^α)(1+|u|^γ)`.
    pub weight_bound: f64,
}

impl ModelConstants {
    fn validate(&self) -> Result<()> {
        let ok = self.alpha > 1.0
            && self.beta >= 0.0
            && self.gamma >= 0.0
            && self.c > 0.0
            && self.c0 >= 0.0
            && self.growth >= 0.0
            && self.weight_bound >= 0.0;
        let finite = [self.alpha, self.beta, self.gamma, self.c0, self.c, self.growth, self.weight_bound]
            .iter()
            .all(|x| x.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid model constants {self:?}")))
        }
    }
}

/// A model: space, drift, noise and declared constants. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    name: String,
    space: Arc<SpaceSpec>,
    drift: Arc<dyn Drift>,
    noise: NoiseSpec,
    constants: ModelConstants,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        space: SpaceSpec,
        drift: Arc<dyn Drift>,
        noise: NoiseSpec,
        constants: ModelConstants,
    ) -> Result<Self> {
        constants.validate()?;
        if (constants.alpha - space.alpha()).abs() > 0.0 {
            return Err(Error::Config(format!(
                "model alpha {} differs from space alpha {}",
                constants.alpha,
                space.alpha()
            )));
        }
        noise.validate(&space)?;
        let lip = noise.lipschitz_bound(&space);
        if lip > constants.c0 {
            return Err(Error::Config(format!(
                "noise Lipschitz constant {lip} exceeds C0 = {}",
                constants.c0
            )));
        }
        Ok(Self {
            name: name.into(),
            space: Arc::new(space),
            drift,
            noise,
            constants,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn drift_op(&self) -> &dyn Drift {
        self.drift.as_ref()
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    /// Same drift and space, different noise. Constants are kept, so the
    /// new noise must still respect the declared `C₀`.
    pub fn with_noise(&self, noise: NoiseSpec) -> Result<Self> {
        Self::new(self.name.clone(), (*self.space).clone(), self.drift.clone(), noise, self.constants)
    }

    pub fn with_constants(&self, constants: ModelConstants) -> Result<Self> {
        Self::new(self.name.clone(), (*self.space).clone(), self.drift.clone(), self.noise.clone(), constants)
    }

    /// `A(t,u)`, checked for finiteness.
    pub fn drift(&self, t: f64, u: &SpectralField) -> Result<SpectralField> {
        self.space.check(u)?;
        let a = self.drift.apply(t, u.coeffs())?;
        check_len(self.space.len(), a.len())?;
        if a.iter().all(|x| x.is_finite()) {
            Ok(SpectralField::from_vec(a))
        } else {
            Err(Error::NonFinite { model: self.name.clone() })
        }
    }

    /// `B(t,u) dW`.
    pub fn apply_noise(&self, u: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        self.noise.apply(&self.space, u, dw)
    }

    /// `‖B(u)‖²_{L₂(U,H)}`.
    pub fn noise_hs_sq(&self, u: &SpectralField) -> f64 {
        self.noise.hs_norm_sq(&self.space, u.coeffs())
    }

    /// `‖B(u) − B(v)‖²_{L₂(U,H)}`.
    pub fn noise_hs_diff_sq(&self, u: &SpectralField, v: &SpectralField) -> f64 {
        self.noise.hs_diff_sq(&self.space, u.coeffs(), v.coeffs())
    }

    pub fn rho(&self, u: &SpectralField) -> f64 {
        self.drift.rho(&self.space, u.coeffs())
    }

    pub fn eta(&self, v: &SpectralField) -> f64 {
        self.drift.eta(&self.space, v.coeffs())
    }

    /// `radius` times the model's unit initial direction.
    pub fn initial_state(&self, radius: f64) -> SpectralField {
        self.drift.initial_direction(&self.space).scaled(radius)
    }
}

/// `⟨a, v⟩` for a dual element `a`: the weighted coefficient contraction.
pub fn dual_pairing(space: &SpaceSpec, a: &SpectralField, v: &SpectralField) -> Result<f64> {
    space.dual_pairing(a, v)
}
