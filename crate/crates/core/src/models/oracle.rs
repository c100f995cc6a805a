use alloc::vec::Vec;

use crate::error::Result;

/// `κ u`: pushes outward for `κ > 0`, inward for `κ < 0`.
pub fn oracle_drift_1d(u: f64, kappa: f64) -> f64 {
    kappa * u
}

/// Linear drift `A(u) = κ u` on `H = ℝ`, stepped by plain Euler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDrift {
    pub kappa: f64,
}

impl super::Drift for OracleDrift {
    fn apply(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(u.iter().map(|&x| oracle_drift_1d(x, self.kappa)).collect())
    }
}

/// Diagonal linear drift `A(u)_k = λ_k u_k` (for instance the Laplacian
/// with `λ_k = −|k|²`), integrated exactly by the steppers.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDiagonal {
    symbol: Vec<f64>,
}

impl LinearDiagonal {
    pub fn new(symbol: Vec<f64>) -> Self {
        Self { symbol }
    }

    pub fn laplacian(k2: &[f64]) -> Self {
        Self::new(k2.iter().map(|k| -k).collect())
    }

    pub fn zero(len: usize) -> Self {
        Self::new(alloc::vec![0.0; len])
    }
}

impl super::Drift for LinearDiagonal {
    fn apply(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.symbol.iter().zip(u).map(|(l, x)| l * x).collect())
    }

    fn linear_part(&self) -> Option<&[f64]> {
        Some(&self.symbol)
    }

    fn nonlinear(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(alloc::vec![0.0; u.len()])
    }
}
