use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fourier::TorusGrid;
use crate::hilbert::{SpaceSpec, VNorm};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// `A(u) = (|u'|^{p−2} u')'` on the mean-free 1-D torus.
///
/// The flux is formed on the same collocation grid that defines the
/// `W^{1,p}` norm, so `⟨A(u), v⟩ = −mean_j |u'_j|^{p−2} u'_j v'_j` holds to
/// rounding. Monotonicity and the coercivity identity
/// `⟨A(u), u⟩ = −‖u‖^p_V` therefore survive the discretization.
#[derive(Debug, Clone)]
pub struct PLaplacian {
    p: f64,
    grid: TorusGrid,
}

impl PLaplacian {
    pub fn new(space: &SpaceSpec) -> Result<Self> {
        let p = match space.v_norm_kind() {
            VNorm::GradientLp { p } => *p,
            VNorm::Weighted(_) => {
                return Err(Error::Config("p-Laplacian needs a W^{1,p} space".into()))
            }
        };
        if p < 2.0 {
            return Err(Error::Unsupported { name: "p", value: p });
        }
        let grid = space.quadrature_grid().cloned().ok_or_else(|| {
            Error::Config("p-Laplacian needs a quadrature grid".into())
        })?;
        Ok(Self { p, grid })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl super::Drift for PLaplacian {
    fn apply(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let basis = self.grid.basis();
        let mut flux = self.grid.to_grid(&basis.derivative(u));
        let e = self.p - 2.0;
        for d in flux.iter_mut() {
            if e != 0.0 {
                *d *= d.abs().powf(e);
            }
        }
        Ok(basis.derivative(&self.grid.from_grid(&flux)))
    }
}
