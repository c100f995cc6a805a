use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::hilbert::{SpaceSpec, SpectralField};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// `s(x) = x` on `[-1, 1]`, `sign(x)` outside.
pub fn unit_clamp(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Directions `e_k` along which the driving Brownian motions act.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseBasis {
    /// Mode `k` drives coefficient `k`.
    Coordinates,
    /// Explicit directions, orthonormal in the coefficient `ℓ²` inner product.
    Vectors(Vec<SpectralField>),
}

/// `B(u) dW = Σ_k √q_k (μ + λ s(u_k)) dW_k e_k`, where `u_k` is the
/// coordinate of `u` along `e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    q: Vec<f64>,
    mu: f64,
    lambda: f64,
    basis: NoiseBasis,
}

impl NoiseSpec {
    pub fn new(q: Vec<f64>, mu: f64, lambda: f64, basis: NoiseBasis) -> Result<Self> {
        if let Some(i) = q.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Config(format!("q[{i}] = {} must be finite and nonnegative", q[i])));
        }
        if !(mu.is_finite() && lambda.is_finite()) {
            return Err(Error::Config("noise amplitudes must be finite".into()));
        }
        if let NoiseBasis::Vectors(v) = &basis {
            check_len(q.len(), v.len())?;
        }
        Ok(Self { q, mu, lambda, basis })
    }

    /// No noise at all.
    pub fn none() -> Self {
        Self {
            q: Vec::new(),
            mu: 0.0,
            lambda: 0.0,
            basis: NoiseBasis::Coordinates,
        }
    }

    /// Coordinate noise on the first `modes` coefficients with
    /// `q_k = q0 (1 + |k|²)^{-decay}`.
    pub fn diagonal_decay(
        space: &SpaceSpec,
        modes: usize,
        q0: f64,
        decay: f64,
        mu: f64,
        lambda: f64,
    ) -> Result<Self> {
        if modes > space.len() {
            return Err(Error::Config(format!(
                "{modes} noise modes requested for a space of {} coefficients",
                space.len()
            )));
        }
        let q = space.k2()[..modes]
            .iter()
            .map(|k2| q0 * (1.0 + k2).powf(-decay))
            .collect();
        Self::new(q, mu, lambda, NoiseBasis::Coordinates)
    }

    pub fn mode_count(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn basis(&self) -> &NoiseBasis {
        &self.basis
    }

    pub(crate) fn validate(&self, space: &SpaceSpec) -> Result<()> {
        match &self.basis {
            NoiseBasis::Coordinates if self.q.len() > space.len() => Err(Error::Dimension {
                expected: space.len(),
                found: self.q.len(),
            }),
            NoiseBasis::Vectors(v) => v.iter().try_for_each(|e| space.check(e)),
            _ => Ok(()),
        }
    }

    fn coordinate(&self, u: &[f64], k: usize) -> f64 {
        match &self.basis {
            NoiseBasis::Coordinates => u[k],
            NoiseBasis::Vectors(v) => v[k].coeffs().iter().zip(u).map(|(a, b)| a * b).sum(),
        }
    }

    fn direction_h_sq(&self, space: &SpaceSpec, k: usize) -> f64 {
        match &self.basis {
            NoiseBasis::Coordinates => space.h_weights()[k],
            NoiseBasis::Vectors(v) => space.inner_h_raw(v[k].coeffs(), v[k].coeffs()),
        }
    }

    pub fn apply(&self, space: &SpaceSpec, u: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        space.check(u)?;
        check_len(self.q.len(), dw.len())?;
        let mut out = space.zeros();
        self.apply_into(u.coeffs(), dw, out.coeffs_mut());
        Ok(out)
    }

    /// Adds `B(u) dW` to `out`.
    pub(crate) fn apply_into(&self, u: &[f64], dw: &[f64], out: &mut [f64]) {
        for (k, (&q, &w)) in self.q.iter().zip(dw).enumerate() {
            if q == 0.0 || w == 0.0 {
                continue;
            }
            let amp = q.sqrt() * (self.mu + self.lambda * unit_clamp(self.coordinate(u, k))) * w;
            match &self.basis {
                NoiseBasis::Coordinates => out[k] += amp,
                NoiseBasis::Vectors(v) => {
                    for (o, e) in out.iter_mut().zip(v[k].coeffs()) {
                        *o += amp * e;
                    }
                }
            }
        }
    }

    pub fn hs_norm_sq(&self, space: &SpaceSpec, u: &[f64]) -> f64 {
        (0..self.q.len())
            .map(|k| {
                let a = self.mu + self.lambda * unit_clamp(self.coordinate(u, k));
                self.q[k] * a * a * self.direction_h_sq(space, k)
            })
            .sum()
    }

    pub fn hs_diff_sq(&self, space: &SpaceSpec, u: &[f64], v: &[f64]) -> f64 {
        (0..self.q.len())
            .map(|k| {
                let d = self.lambda
                    * (unit_clamp(self.coordinate(u, k)) - unit_clamp(self.coordinate(v, k)));
                self.q[k] * d * d * self.direction_h_sq(space, k)
            })
            .sum()
    }

    /// `sup_u ‖B(u)‖²_{L₂}`.
    pub fn hs_bound(&self, space: &SpaceSpec) -> f64 {
        let a = self.mu.abs() + self.lambda.abs();
        (0..self.q.len())
            .map(|k| self.q[k] * a * a * self.direction_h_sq(space, k))
            .sum()
    }

    /// Lipschitz constant `L` with `‖B(u) − B(v)‖²_{L₂} ≤ L |u − v|²_H`.
    pub fn lipschitz_bound(&self, space: &SpaceSpec) -> f64 {
        let h_min = space.h_weights().iter().copied().fold(f64::INFINITY, f64::min);
        let worst = (0..self.q.len())
            .map(|k| self.q[k] * self.direction_h_sq(space, k))
            .fold(0.0, f64::max);
        self.lambda * self.lambda * worst / h_min
    }
}
