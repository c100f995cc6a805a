use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fourier::{grid_size_above, TorusBasis, TorusGrid};
use crate::hilbert::{Layout, SpaceSpec};

/// `A(u) = Δu + u − u³` on the 1-D torus.
///
/// The cube is evaluated on a grid of more than `4 k_max` points, so the
/// truncated product equals the exact Galerkin projection of `u³`.
#[derive(Debug, Clone)]
pub struct AllenCahn {
    grid: TorusGrid,
    laplacian: Vec<f64>,
}

impl AllenCahn {
    pub fn new(space: &SpaceSpec, grid_points: Option<usize>) -> Result<Self> {
        let basis = match space.layout() {
            Layout::Torus1d(b @ TorusBasis { zero_mean: false, .. }) => *b,
            other => {
                return Err(Error::Config(format!(
                    "Allen-Cahn needs a 1-D torus space with a mean mode, got {other:?}"
                )))
            }
        };
        let min = 4 * basis.k_max;
        let n = grid_points.unwrap_or_else(|| grid_size_above(min));
        if n <= min {
            return Err(Error::Config(format!(
                "grid of {n} points is too small to dealias the cubic term (need > {min})"
            )));
        }
        Ok(Self {
            grid: TorusGrid::new(basis, n)?,
            laplacian: space.k2().iter().map(|k| -k).collect(),
        })
    }

    /// Galerkin projection of `u³`.
    pub fn cube(&self, u: &[f64]) -> Vec<f64> {
        let mut v = self.grid.to_grid(u);
        for x in v.iter_mut() {
            *x = *x * *x * *x;
        }
        self.grid.from_grid(&v)
    }

    pub fn grid_points(&self) -> usize {
        self.grid.points()
    }
}

impl super::Drift for AllenCahn {
    fn apply(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut a = self.nonlinear(t, u)?;
        for ((a, l), u) in a.iter_mut().zip(&self.laplacian).zip(u) {
            *a += l * u;
        }
        Ok(a)
    }

    fn linear_part(&self) -> Option<&[f64]> {
        Some(&self.laplacian)
    }

    fn nonlinear(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let cube = self.cube(u);
        Ok(u.iter().zip(cube).map(|(u, c)| u - c).collect())
    }
}
