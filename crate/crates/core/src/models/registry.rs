//! Name-keyed model construction.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;

use super::{AllenCahn, ModelConstants, ModelSpec, NoiseSpec, OracleDrift, PLaplacian};
use crate::error::{Error, Result};
use crate::hilbert::SpaceSpec;

pub const MODEL_NAMES: [&str; 4] = ["allen_cahn", "p_laplacian", "oracle_1d", "tamed_nse"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub name: String,
    /// Highest retained wavenumber per dimension.
    pub modes: usize,
    pub p: f64,
    pub kappa: f64,
    pub nu: f64,
    pub taming_n: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            name: "allen_cahn".into(),
            modes: 16,
            p: 4.0,
            kappa: 1.0,
            nu: 1.0,
            taming_n: 1.0,
        }
    }
}

/// Noise `q_k = q0 (1 + |k|²)^{-decay}` on the first `modes` directions.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    /// `None` drives every coefficient (or the whole lowest shell for
    /// `tamed_nse`).
    pub modes: Option<usize>,
    pub q0: f64,
    pub decay: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            modes: None,
            q0: 0.1,
            decay: 1.0,
            mu: 1.0,
            lambda: 0.0,
        }
    }
}

impl NoiseParams {
    pub fn none() -> Self {
        Self {
            q0: 0.0,
            mu: 0.0,
            ..Self::default()
        }
    }

    pub(crate) fn diagonal(&self, space: &SpaceSpec) -> Result<NoiseSpec> {
        let k = self.modes.unwrap_or(space.len());
        NoiseSpec::diagonal_decay(space, k, self.q0, self.decay, self.mu, self.lambda)
    }
}

pub fn build(model: &ModelParams, noise: &NoiseParams) -> Result<ModelSpec> {
    match model.name.as_str() {
        "allen_cahn" => allen_cahn(model.modes, noise),
        "p_laplacian" => p_laplacian(model.modes, model.p, noise),
        "oracle_1d" => oracle_1d(model.kappa, noise),
        "tamed_nse" => crate::tamednse::model(model.modes, model.nu, model.taming_n, noise),
        other => Err(Error::Config(format!(
            "unknown model {other:?}; expected one of {MODEL_NAMES:?}"
        ))),
    }
}

/// Sup-norm interpolation constant on the normalized 1-D torus:
/// `‖u‖²_∞ ≤ (1 + 4π) |u|_{L²} ‖u‖_{H¹}`.
const TORUS_AGMON: f64 = 1.0 + 4.0 * core::f64::consts::PI;

pub fn allen_cahn(k_max: usize, noise: &NoiseParams) -> Result<ModelSpec> {
    let space = SpaceSpec::torus_l2_h1(k_max)?;
    let drift = AllenCahn::new(&space, None)?;
    let noise = noise.diagonal(&space)?;
    let lip = noise.lipschitz_bound(&space);
    let constants = ModelConstants {
        alpha: 2.0,
        beta: 4.0,
        gamma: 4.0,
        // coercivity needs 4 + sup‖B‖², monotonicity 2 + Lip(B)
        c0: f64::max(4.0 + noise.hs_bound(&space), 2.0 + lip),
        c: 2.0,
        growth: 3.0 * (2.0 + TORUS_AGMON * TORUS_AGMON),
        weight_bound: 0.0,
    };
    ModelSpec::new("allen_cahn", space, Arc::new(drift), noise, constants)
}

pub fn p_laplacian(k_max: usize, p: f64, noise: &NoiseParams) -> Result<ModelSpec> {
    if p < 2.0 {
        return Err(Error::Unsupported { name: "p", value: p });
    }
    let space = SpaceSpec::torus_w1p(k_max, p)?;
    let drift = PLaplacian::new(&space)?;
    let noise = noise.diagonal(&space)?;
    let constants = ModelConstants {
        alpha: p,
        beta: 0.0,
        gamma: 0.0,
        c0: 1f64.max(noise.hs_bound(&space)).max(noise.lipschitz_bound(&space)),
        c: 2.0,
        growth: 1.0,
        weight_bound: 0.0,
    };
    ModelSpec::new("p_laplacian", space, Arc::new(drift), noise, constants)
}

/// `dX = κX dt + √q0 (μ + λ s(X)) dW` on `H = ℝ`.
pub fn oracle_1d(kappa: f64, noise: &NoiseParams) -> Result<ModelSpec> {
    let space = SpaceSpec::euclidean(1)?;
    let noise = NoiseSpec::diagonal_decay(&space, 1, noise.q0, 0.0, noise.mu, noise.lambda)?;
    let constants = ModelConstants {
        alpha: 2.0,
        beta: 0.0,
        gamma: 0.0,
        c0: (2.0 * kappa.abs() + 1.0 + noise.hs_bound(&space)).max(noise.lipschitz_bound(&space)),
        c: 1.0,
        growth: (kappa * kappa).max(f64::MIN_POSITIVE),
        weight_bound: 0.0,
    };
    ModelSpec::new("oracle_1d", space, Arc::new(OracleDrift { kappa }), noise, constants)
}

/// Oracle model with additive noise of amplitude `sigma`.
pub fn oracle_1d_sigma(kappa: f64, sigma: f64) -> Result<ModelSpec> {
    oracle_1d(
        kappa,
        &NoiseParams {
            modes: Some(1),
            q0: sigma * sigma,
            decay: 0.0,
            mu: 1.0,
            lambda: 0.0,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_names_are_rejected() {
        let p = ModelParams {
            name: "navier".into(),
            ..ModelParams::default()
        };
        assert!(matches!(build(&p, &NoiseParams::default()), Err(Error::Config(_))));
    }

    #[test]
    fn registry_builds_scalar_models() {
        for name in ["allen_cahn", "p_laplacian", "oracle_1d"] {
            let p = ModelParams {
                name: name.into(),
                modes: 4,
                ..ModelParams::default()
            };
            let m = build(&p, &NoiseParams::default()).unwrap();
            assert_eq!(m.name(), name);
            let x0 = m.initial_state(0.5);
            assert!((m.space().norm_h(&x0).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_sigma_noise() {
        let m = oracle_1d_sigma(1.0, 0.5).unwrap();
        let b = m.apply_noise(&m.space().zeros(), &[2.0]).unwrap();
        assert_eq!(b.coeffs(), &[1.0]);
    }

    #[test]
    fn lipschitz_noise_above_c0_is_rejected() {
        let m = oracle_1d_sigma(0.0, 0.0).unwrap();
        let loud = NoiseSpec::new(alloc::vec![100.0], 0.0, 1.0, super::super::NoiseBasis::Coordinates).unwrap();
        assert!(m.with_noise(loud).is_err());
    }
}
