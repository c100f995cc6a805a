//! Truncated spectral representations of `V ⊆ H ⊆ V*` and the nearest-point
//! projection onto the closed unit ball of `H`.
//!
//! A [`SpectralField`] is a coefficient vector with respect to a basis that
//! is orthonormal in `L²` (normalized measure). The `H` inner product is the
//! weighted contraction `Σ h_k f_k g_k`, so `H = L²` has unit weights and
//! `H = H¹` has weights `1 + |k|²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::fourier::{grid_size_above, TorusBasis, TorusGrid};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn from_vec(c: Vec<f64>) -> Self {
        Self(c)
    }

    /// Coordinate vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut f = Self::zeros(len);
        f.0[i] = 1.0;
        f
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| s * x).collect())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Unweighted coefficient contraction.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// How the coefficients are laid out over wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// Plain `ℝ^dim`; no spatial grid.
    Euclidean { dim: usize },
    /// Real Fourier basis on the 1-D torus.
    Torus1d(TorusBasis),
    /// Divergence-free 3-D velocity fields with `|k|_∞ ≤ modes`.
    Solenoidal3d { modes: usize },
}

/// Norm of `V`.
#[derive(Debug, Clone, PartialEq)]
pub enum VNorm {
    /// `‖f‖²_V = Σ w_k f_k²`.
    Weighted(Vec<f64>),
    /// `‖f‖_V = (mean_j |f'(x_j)|^p)^{1/p}` on the collocation grid of a
    /// mean-free 1-D torus space.
    GradientLp { p: f64 },
}

#[derive(Debug, Clone)]
pub struct SpaceSpec {
    layout: Layout,
    h_weights: Vec<f64>,
    v_norm: VNorm,
    alpha: f64,
    k2: Vec<f64>,
    quadrature: Option<TorusGrid>,
}

impl PartialEq for SpaceSpec {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout
            && self.h_weights == other.h_weights
            && self.v_norm == other.v_norm
            && self.alpha == other.alpha
    }
}

fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    match w.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
        None => Ok(()),
        Some(i) => Err(Error::Config(format!(
            "{name}[{i}] = {} is not strictly positive and finite",
            w[i]
        ))),
    }
}

impl SpaceSpec {
    /// General constructor. `k2` holds `|k|²` for every coefficient.
    pub fn new(
        layout: Layout,
        h_weights: Vec<f64>,
        v_norm: VNorm,
        alpha: f64,
        k2: Vec<f64>,
    ) -> Result<Self> {
        let len = h_weights.len();
        if len == 0 {
            return Err(Error::Config("space has no coefficients".into()));
        }
        check_len(len, k2.len())?;
        check_weights("h_weights", &h_weights)?;
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::Unsupported { name: "alpha", value: alpha });
        }
        let quadrature = match &v_norm {
            VNorm::Weighted(w) => {
                check_len(len, w.len())?;
                check_weights("v_weights", w)?;
                None
            }
            VNorm::GradientLp { p } => {
                let basis = match &layout {
                    Layout::Torus1d(b) if b.zero_mean => *b,
                    _ => {
                        return Err(Error::Config(
                            "gradient L^p norm needs a mean-free 1-D torus layout".into(),
                        ))
                    }
                };
                if !(*p >= 2.0 && p.is_finite()) {
                    return Err(Error::Unsupported { name: "p", value: *p });
                }
                // twice the coefficient count
                Some(TorusGrid::new(basis, grid_size_above(2 * basis.len() - 1))?)
            }
        };
        let space = Self {
            layout,
            h_weights,
            v_norm,
            alpha,
            k2,
            quadrature,
        };
        if space.layout_len() != Some(len) && space.layout_len().is_some() {
            return Err(Error::Dimension {
                expected: space.layout_len().unwrap_or(len),
                found: len,
            });
        }
        Ok(space)
    }

    fn layout_len(&self) -> Option<usize> {
        match &self.layout {
            Layout::Euclidean { dim } => Some(*dim),
            Layout::Torus1d(b) => Some(b.len()),
            Layout::Solenoidal3d { .. } => None,
        }
    }

    /// `ℝ^dim` with the Euclidean inner product; `V = H`, `α = 2`.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(
            Layout::Euclidean { dim },
            vec![1.0; dim],
            VNorm::Weighted(vec![1.0; dim]),
            2.0,
            vec![0.0; dim],
        )
    }

    /// `H = L²(𝕋)`, `V = H¹(𝕋)` with weights `1 + k²`, `α = 2`.
    pub fn torus_l2_h1(k_max: usize) -> Result<Self> {
        let basis = TorusBasis { k_max, zero_mean: false };
        let k2: Vec<f64> = basis.wavenumbers().iter().map(|&k| (k * k) as f64).collect();
        let v = k2.iter().map(|k| 1.0 + k).collect();
        Self::new(Layout::Torus1d(basis), vec![1.0; basis.len()], VNorm::Weighted(v), 2.0, k2)
    }

    /// Mean-free `H = L²(𝕋)`, `V = W^{1,p}(𝕋)` normed by `‖u'‖_{L^p}`, `α = p`.
    pub fn torus_w1p(k_max: usize, p: f64) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Config("mean-free space needs k_max ≥ 1".into()));
        }
        let basis = TorusBasis { k_max, zero_mean: true };
        let k2 = basis.wavenumbers().iter().map(|&k| (k * k) as f64).collect();
        Self::new(Layout::Torus1d(basis), vec![1.0; basis.len()], VNorm::GradientLp { p }, p, k2)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of stored real coefficients.
    pub fn len(&self) -> usize {
        self.h_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_weights.is_empty()
    }

    /// Spatial dimension of the torus (0 for `ℝ^d`).
    pub fn dimension(&self) -> usize {
        match self.layout {
            Layout::Euclidean { .. } => 0,
            Layout::Torus1d(_) => 1,
            Layout::Solenoidal3d { .. } => 3,
        }
    }

    /// Retained wavenumbers per dimension.
    pub fn modes(&self) -> usize {
        match self.layout {
            Layout::Euclidean { dim } => dim,
            Layout::Torus1d(b) => b.k_max,
            Layout::Solenoidal3d { modes } => modes,
        }
    }

    pub fn h_weights(&self) -> &[f64] {
        &self.h_weights
    }

    pub fn v_norm_kind(&self) -> &VNorm {
        &self.v_norm
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `|k|²` per coefficient.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn torus_basis(&self) -> Option<TorusBasis> {
        match self.layout {
            Layout::Torus1d(b) => Some(b),
            _ => None,
        }
    }

    pub fn zeros(&self) -> SpectralField {
        SpectralField::zeros(self.len())
    }

    pub fn check(&self, f: &SpectralField) -> Result<()> {
        check_len(self.len(), f.len())
    }

    /// Smallest `c` with `‖f‖_V ≥ c |f|_H`.
    pub fn embedding_constant(&self) -> f64 {
        match &self.v_norm {
            VNorm::Weighted(w) => w
                .iter()
                .zip(&self.h_weights)
                .map(|(w, h)| (w / h).sqrt())
                .fold(f64::INFINITY, f64::min),
            // ‖u'‖_{L^p} ≥ ‖u'‖_{L²} ≥ |u|_{L²} for mean-free u
            VNorm::GradientLp { .. } => 1.0,
        }
    }

    pub(crate) fn inner_h_raw(&self, f: &[f64], g: &[f64]) -> f64 {
        self.h_weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(h, (a, b))| h * a * b)
            .sum()
    }

    pub(crate) fn norm_h_raw(&self, f: &[f64]) -> f64 {
        self.inner_h_raw(f, f).sqrt()
    }

    /// `Σ h_k f_k g_k`.
    pub fn inner_h(&self, f: &SpectralField, g: &SpectralField) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.inner_h_raw(f.coeffs(), g.coeffs()))
    }

    pub fn norm_h(&self, f: &SpectralField) -> Result<f64> {
        self.check(f)?;
        Ok(self.norm_h_raw(f.coeffs()))
    }

    /// `‖f‖_V^α`, evaluated without a root-and-power round trip.
    pub(crate) fn norm_v_pow_alpha_raw(&self, f: &[f64]) -> f64 {
        match &self.v_norm {
            VNorm::Weighted(w) => {
                let sq: f64 = w.iter().zip(f).map(|(w, c)| w * c * c).sum();
                if self.alpha == 2.0 {
                    sq
                } else {
                    sq.powf(0.5 * self.alpha)
                }
            }
            VNorm::GradientLp { p } => {
                let grid = self.quadrature.as_ref().expect("quadrature grid");
                let du = grid.to_grid(&grid.basis().derivative(f));
                du.iter().map(|d| d.abs().powf(*p)).sum::<f64>() / du.len() as f64
            }
        }
    }

    pub fn norm_v(&self, f: &SpectralField) -> Result<f64> {
        self.check(f)?;
        Ok(match &self.v_norm {
            VNorm::Weighted(w) => w
                .iter()
                .zip(f.coeffs())
                .map(|(w, c)| w * c * c)
                .sum::<f64>()
                .sqrt(),
            VNorm::GradientLp { p } => self.norm_v_pow_alpha_raw(f.coeffs()).powf(1.0 / p),
        })
    }

    pub fn norm_v_pow_alpha(&self, f: &SpectralField) -> Result<f64> {
        self.check(f)?;
        Ok(self.norm_v_pow_alpha_raw(f.coeffs()))
    }

    /// Pairing of a dual element, represented by its `L²` coefficients, with
    /// `v`. Coincides with `inner_h` whenever `a ∈ H`.
    pub fn dual_pairing(&self, a: &SpectralField, v: &SpectralField) -> Result<f64> {
        self.inner_h(a, v)
    }

    /// Exact `V*` norm when `V` is a weighted coefficient space.
    pub fn dual_norm(&self, a: &SpectralField) -> Result<Option<f64>> {
        self.check(a)?;
        Ok(match &self.v_norm {
            VNorm::Weighted(w) => Some(
                w.iter()
                    .zip(&self.h_weights)
                    .zip(a.coeffs())
                    .map(|((w, h), c)| h * h * c * c / w)
                    .sum::<f64>()
                    .sqrt(),
            ),
            VNorm::GradientLp { .. } => None,
        })
    }

    /// The collocation grid used for the `W^{1,p}` quadrature, if any.
    pub fn quadrature_grid(&self) -> Option<&TorusGrid> {
        self.quadrature.as_ref()
    }

    /// Nearest point of the closed unit ball: `f` if `|f|_H ≤ 1`, else
    /// `f / |f|_H`.
    pub fn project_ball(&self, f: &SpectralField) -> Result<SpectralField> {
        let r = self.norm_h(f)?;
        Ok(if r <= 1.0 { f.clone() } else { f.scaled(1.0 / r) })
    }

    /// `(f − π(f), ½ dist(f, D̄)²)`. The gap is the one-sided gradient of the
    /// half squared distance and is parallel to `f`.
    pub fn penalty_gap(&self, f: &SpectralField) -> Result<(SpectralField, f64)> {
        let r = self.norm_h(f)?;
        Ok(if r <= 1.0 {
            (self.zeros(), 0.0)
        } else {
            (f.scaled(1.0 - 1.0 / r), 0.5 * (r - 1.0) * (r - 1.0))
        })
    }

    /// `|f|_H` by trapezoidal quadrature of `|f|²` on a collocation grid.
    pub fn grid_l2_norm(&self, f: &SpectralField) -> Result<Option<f64>> {
        self.check(f)?;
        let Some(basis) = self.torus_basis() else {
            return Ok(None);
        };
        let grid = TorusGrid::new(basis, grid_size_above(2 * basis.k_max))?;
        let u = grid.to_grid(f.coeffs());
        Ok(Some((u.iter().map(|x| x * x).sum::<f64>() / u.len() as f64).sqrt()))
    }
}
