//! Tamed 3-D Navier–Stokes on the torus, reflected in the unit ball of ℍ¹.
//!
//! A real field `u(x) = Σ_k û_k e^{ik·x}` (normalized measure, `û_{-k} = conj
//! û_k`, no `k = 0` mode) is stored over the half space of wavenumbers with
//! `|k|_∞ ≤ modes`: six reals per `k`, `√2 Re û_k` then `√2 Im û_k`, so the
//! coefficient `ℓ²` norm is the `L²` norm.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::fourier::{fft3, grid_size_above, Fft};
use crate::hilbert::{Layout, SpaceSpec, SpectralField, VNorm};
use crate::models::registry::NoiseParams;
use crate::models::{Drift, ModelConstants, ModelSpec, NoiseBasis, NoiseSpec};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Smallest resolution at which the model is configured.
pub const MIN_MODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamedSpec {
    pub nu: f64,
    /// Taming threshold `N`.
    pub taming_n: f64,
    pub modes: usize,
}

impl TamedSpec {
    pub fn new(nu: f64, taming_n: f64, modes: usize) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Unsupported { name: "nu", value: nu });
        }
        if !(taming_n > 0.0 && taming_n.is_finite()) {
            return Err(Error::Unsupported { name: "taming_n", value: taming_n });
        }
        if modes < MIN_MODES {
            return Err(Error::Config(format!(
                "tamed_nse needs at least {MIN_MODES} modes per dimension, got {modes}"
            )));
        }
        Ok(Self { nu, taming_n, modes })
    }
}

/// `g_N(r)`: zero up to `N`, `(r − N)/ν` beyond `N + 1`, and the cubic
/// `(−s³ + 2s²)/ν`, `s = r − N`, in between.
pub fn taming_g(r: f64, spec: &TamedSpec) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("taming function needs r >= 0, got {r}")));
    }
    Ok(taming_raw(r, spec.taming_n, spec.nu))
}

/// Derivative of [`taming_g`].
pub fn taming_g_prime(r: f64, spec: &TamedSpec) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("taming function needs r >= 0, got {r}")));
    }
    let s = r - spec.taming_n;
    Ok(if s <= 0.0 {
        0.0
    } else if s < 1.0 {
        (-3.0 * s * s + 4.0 * s) / spec.nu
    } else {
        1.0 / spec.nu
    })
}

fn taming_raw(r: f64, n: f64, nu: f64) -> f64 {
    let s = r - n;
    if s <= 0.0 {
        0.0
    } else if s < 1.0 {
        s * s * (2.0 - s) / nu
    } else {
        s / nu
    }
}

/// Half-space wavenumbers in storage order.
pub fn wavenumbers(modes: usize) -> Vec<[i32; 3]> {
    let k = modes as i32;
    let mut out = Vec::with_capacity(mode_count(modes));
    out.extend((1..=k).map(|c| [0, 0, c]));
    for b in 1..=k {
        out.extend((-k..=k).map(|c| [0, b, c]));
    }
    for a in 1..=k {
        for b in -k..=k {
            out.extend((-k..=k).map(|c| [a, b, c]));
        }
    }
    out
}

pub fn mode_count(modes: usize) -> usize {
    let w = 2 * modes + 1;
    (w * w * w - 1) / 2
}

/// Storage slot of `k`, and whether `k` lies in the negative half (so the
/// stored value is `conj û_k`).
pub fn mode_index(modes: usize, k: [i32; 3]) -> Option<(usize, bool)> {
    let m = modes as i32;
    if k == [0, 0, 0] || k.iter().any(|c| c.abs() > m) {
        return None;
    }
    let positive = k[0] > 0 || (k[0] == 0 && (k[1] > 0 || (k[1] == 0 && k[2] > 0)));
    let [a, b, c] = if positive { k } else { [-k[0], -k[1], -k[2]] };
    let w = 2 * m + 1;
    let idx = if a == 0 && b == 0 {
        c - 1
    } else if a == 0 {
        m + (b - 1) * w + (c + m)
    } else {
        m + m * w + (a - 1) * w * w + (b + m) * w + (c + m)
    };
    Some((idx as usize, !positive))
}

fn k_sq(k: &[i32; 3]) -> f64 {
    k.iter().map(|&c| (c * c) as f64).sum()
}

/// A velocity field in the half-space storage.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField3D {
    modes: usize,
    field: SpectralField,
}

impl VelocityField3D {
    pub fn zeros(modes: usize) -> Self {
        Self {
            modes,
            field: SpectralField::zeros(6 * mode_count(modes)),
        }
    }

    pub fn from_field(modes: usize, field: SpectralField) -> Result<Self> {
        check_len(6 * mode_count(modes), field.len())?;
        Ok(Self { modes, field })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }

    /// `û_k`, for either half of the spectrum.
    pub fn mode(&self, k: [i32; 3]) -> Option<[Complex64; 3]> {
        let (i, conj) = mode_index(self.modes, k)?;
        let c = &self.field.coeffs()[6 * i..6 * i + 6];
        let s = if conj { -1.0 } else { 1.0 };
        Some(core::array::from_fn(|d| Complex64::new(c[d], s * c[3 + d]) / SQRT_2))
    }

    /// Sets `û_k` (and implicitly `û_{-k}`).
    pub fn set_mode(&mut self, k: [i32; 3], value: [Complex64; 3]) -> Result<()> {
        let (i, conj) = mode_index(self.modes, k)
            .ok_or_else(|| Error::Config(format!("wavenumber {k:?} is not retained")))?;
        let s = if conj { -1.0 } else { 1.0 };
        let c = &mut self.field.coeffs_mut()[6 * i..6 * i + 6];
        for d in 0..3 {
            c[d] = SQRT_2 * value[d].re;
            c[3 + d] = s * SQRT_2 * value[d].im;
        }
        Ok(())
    }

    /// `max_k |k·û_k|`.
    pub fn max_divergence(&self) -> f64 {
        wavenumbers(self.modes)
            .iter()
            .zip(self.field.coeffs().chunks_exact(6))
            .map(|(k, c)| {
                let re: f64 = (0..3).map(|d| k[d] as f64 * c[d]).sum();
                let im: f64 = (0..3).map(|d| k[d] as f64 * c[3 + d]).sum();
                re.hypot(im) / SQRT_2
            })
            .fold(0.0, f64::max)
    }
}

fn leray_triple(k: &[i32; 3], v: &mut [f64]) {
    let k2 = k_sq(k);
    let kv: f64 = (0..3).map(|d| k[d] as f64 * v[d]).sum();
    for d in 0..3 {
        v[d] -= k[d] as f64 * kv / k2;
    }
}

/// Leray projection of raw half-space coefficients.
pub fn leray_project_coeffs(modes: usize, coeffs: &[f64]) -> Result<Vec<f64>> {
    check_len(6 * mode_count(modes), coeffs.len())?;
    let mut out = coeffs.to_vec();
    for (k, c) in wavenumbers(modes).iter().zip(out.chunks_exact_mut(6)) {
        leray_triple(k, &mut c[..3]);
        leray_triple(k, &mut c[3..]);
    }
    Ok(out)
}

/// `û_k ← û_k − k (k·û_k)/|k|²` for every retained `k`.
pub fn leray_project(f: &VelocityField3D) -> VelocityField3D {
    let c = leray_project_coeffs(f.modes, f.field.coeffs()).expect("consistent length");
    VelocityField3D {
        modes: f.modes,
        field: SpectralField::from_vec(c),
    }
}

/// `ℍ¹` with `V = ℍ²`: weights `1 + |k|²` and `(1 + |k|²)²`, `α = 2`.
pub fn h1_space(modes: usize) -> Result<SpaceSpec> {
    let ks = wavenumbers(modes);
    let k2: Vec<f64> = ks.iter().flat_map(|k| [k_sq(k); 6]).collect();
    let h: Vec<f64> = k2.iter().map(|k2| 1.0 + k2).collect();
    let v = h.iter().map(|h| h * h).collect();
    SpaceSpec::new(Layout::Solenoidal3d { modes }, h, VNorm::Weighted(v), 2.0, k2)
}

/// `sup_x |u(x)| ≤ S |u|_{ℍ¹}` on the truncated space:
/// `S² = Σ_{k≠0} (1 + |k|²)⁻¹`.
pub fn sup_constant(modes: usize) -> f64 {
    let m = modes as i32;
    let mut s = 0.0;
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                if (a, b, c) != (0, 0, 0) {
                    s += 1.0 / (1.0 + (a * a + b * b + c * c) as f64);
                }
            }
        }
    }
    s.sqrt()
}

/// `A(u) = P(νΔu) − P((u·∇)u) − P(g_N(|u|²)u)`, nonlinear terms evaluated
/// pseudo-spectrally on a grid of more than `3·modes` points per axis.
#[derive(Debug, Clone)]
pub struct TamedNse {
    spec: TamedSpec,
    ks: Vec<[i32; 3]>,
    linear: Vec<f64>,
    fft: Arc<Fft>,
    sup: f64,
}

struct Terms {
    convection: Vec<f64>,
    taming: Vec<f64>,
}

impl TamedNse {
    pub fn new(spec: TamedSpec) -> Result<Self> {
        let spec = TamedSpec::new(spec.nu, spec.taming_n, spec.modes)?;
        let ks = wavenumbers(spec.modes);
        let linear = ks.iter().flat_map(|k| [-spec.nu * k_sq(k); 6]).collect();
        let fft = Arc::new(Fft::new(grid_size_above(3 * spec.modes))?);
        Ok(Self {
            spec,
            ks,
            linear,
            fft,
            sup: sup_constant(spec.modes),
        })
    }

    pub fn spec(&self) -> &TamedSpec {
        &self.spec
    }

    pub fn grid_points(&self) -> usize {
        self.fft.len()
    }

    pub fn sup_constant(&self) -> f64 {
        self.sup
    }

    fn grid_index(&self, k: &[i32; 3]) -> usize {
        let n = self.fft.len() as i32;
        let w = |c: i32| c.rem_euclid(n) as usize;
        (w(k[0]) * n as usize + w(k[1])) * n as usize + w(k[2])
    }

    fn terms(&self, u: &[f64]) -> Result<Terms> {
        check_len(self.linear.len(), u.len())?;
        let n = self.fft.len();
        let n3 = n * n * n;
        let zero = Complex64::new(0.0, 0.0);
        let mut vel = vec![vec![zero; n3]; 3];
        for (k, c) in self.ks.iter().zip(u.chunks_exact(6)) {
            let (ip, im) = (self.grid_index(k), self.grid_index(&[-k[0], -k[1], -k[2]]));
            for d in 0..3 {
                let z = Complex64::new(c[d], c[3 + d]) / SQRT_2;
                vel[d][ip] = z;
                vel[d][im] = z.conj();
            }
        }
        let grid: Vec<Vec<f64>> = vel
            .into_iter()
            .map(|mut v| {
                fft3(&self.fft, &mut v, true);
                v.into_iter().map(|z| z.re).collect()
            })
            .collect();
        // products u_i u_j (upper triangle) then g(|u|²) u_i
        const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
        let mut prods = vec![vec![zero; n3]; 9];
        for x in 0..n3 {
            let v = [grid[0][x], grid[1][x], grid[2][x]];
            let g = taming_raw(v[0] * v[0] + v[1] * v[1] + v[2] * v[2], self.spec.taming_n, self.spec.nu);
            for (p, (i, j)) in PAIRS.iter().enumerate() {
                prods[p][x].re = v[*i] * v[*j];
            }
            for d in 0..3 {
                prods[6 + d][x].re = g * v[d];
            }
        }
        let scale = 1.0 / n3 as f64;
        for p in prods.iter_mut() {
            fft3(&self.fft, p, false);
        }
        let pair = |i: usize, j: usize| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            PAIRS.iter().position(|&q| q == (i, j)).unwrap()
        };
        let mut convection = vec![0.0; u.len()];
        let mut taming = vec![0.0; u.len()];
        for (m, k) in self.ks.iter().enumerate() {
            let idx = self.grid_index(k);
            let mut conv = [zero; 3];
            let mut tame = [zero; 3];
            for i in 0..3 {
                // ((u·∇)u)_i = Σ_j ∂_j(u_j u_i) for divergence-free u
                for j in 0..3 {
                    conv[i] += Complex64::new(0.0, k[j] as f64) * prods[pair(i, j)][idx] * scale;
                }
                tame[i] = prods[6 + i][idx] * scale;
            }
            for (out, src) in [(&mut convection, conv), (&mut taming, tame)] {
                let c = &mut out[6 * m..6 * m + 6];
                for d in 0..3 {
                    c[d] = SQRT_2 * src[d].re;
                    c[3 + d] = SQRT_2 * src[d].im;
                }
                leray_triple(k, &mut c[..3]);
                leray_triple(k, &mut c[3..]);
            }
        }
        Ok(Terms { convection, taming })
    }

    /// `P((u·∇)u)`.
    pub fn convection(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.terms(u)?.convection)
    }

    /// `P(g_N(|u|²)u)`.
    pub fn taming(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.terms(u)?.taming)
    }

    /// Weight of the local monotonicity bound:
    /// `(4S²/ν)|u|² + (16S⁴/ν³)|u|⁴` in `ℍ¹`.
    fn weight(&self, space: &SpaceSpec, u: &[f64]) -> f64 {
        let r2 = space.inner_h_raw(u, u);
        let (s2, nu) = (self.sup * self.sup, self.spec.nu);
        4.0 * s2 / nu * r2 + 16.0 * s2 * s2 / (nu * nu * nu) * r2 * r2
    }
}

impl Drift for TamedNse {
    fn apply(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let Terms { convection, taming } = self.terms(u)?;
        Ok(self
            .linear
            .iter()
            .zip(u)
            .zip(convection.iter().zip(&taming))
            .map(|((l, u), (c, g))| l * u - c - g)
            .collect())
    }

    fn linear_part(&self) -> Option<&[f64]> {
        Some(&self.linear)
    }

    fn nonlinear(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let Terms { convection, taming } = self.terms(u)?;
        Ok(convection.iter().zip(&taming).map(|(c, g)| -c - g).collect())
    }

    fn rho(&self, space: &SpaceSpec, u: &[f64]) -> f64 {
        self.weight(space, u)
    }

    fn eta(&self, space: &SpaceSpec, v: &[f64]) -> f64 {
        self.weight(space, v)
    }

    fn admissible(&self, u: Vec<f64>) -> Vec<f64> {
        leray_project_coeffs(self.spec.modes, &u).unwrap_or(u)
    }

    /// ABC-type flow on the lowest shell, unit `ℍ¹` norm.
    fn initial_direction(&self, space: &SpaceSpec) -> SpectralField {
        let mut f = space.zeros();
        let c = f.coeffs_mut();
        for (k, d) in [([1, 0, 0], 1), ([0, 1, 0], 2), ([0, 0, 1], 0)] {
            let (i, _) = mode_index(self.spec.modes, k).expect("lowest shell is retained");
            c[6 * i + d] = 1.0;
        }
        let r = space.norm_h_raw(f.coeffs());
        f.scaled(1.0 / r)
    }
}

/// `A(u)` for a single field; builds the operator on every call.
pub fn tamed_drift(u: &VelocityField3D, spec: &TamedSpec) -> Result<VelocityField3D> {
    check_len(spec.modes, u.modes)?;
    let a = TamedNse::new(*spec)?.apply(0.0, u.field.coeffs())?;
    VelocityField3D::from_field(u.modes, SpectralField::from_vec(a))
}

/// Orthonormal divergence-free directions on the shell `|k| = 1`: two
/// polarizations times real and imaginary parts for each of the three
/// half-space wavenumbers.
pub fn lowest_shell_directions(modes: usize) -> Vec<SpectralField> {
    let len = 6 * mode_count(modes);
    let mut out = Vec::with_capacity(12);
    for (k, pol) in [([0, 0, 1], [0, 1]), ([0, 1, 0], [0, 2]), ([1, 0, 0], [1, 2])] {
        let (i, _) = mode_index(modes, k).expect("lowest shell is retained");
        for part in [0, 3] {
            for d in pol {
                out.push(SpectralField::unit(len, 6 * i + part + d));
            }
        }
    }
    out
}

/// Registry entry: additive noise `q0 · 2^{-decay}` per lowest-shell
/// direction, `μ`, `λ` as configured.
pub fn model(modes: usize, nu: f64, taming_n: f64, noise: &NoiseParams) -> Result<ModelSpec> {
    let spec = TamedSpec::new(nu, taming_n, modes)?;
    let space = h1_space(modes)?;
    let drift = TamedNse::new(spec)?;
    let mut dirs = lowest_shell_directions(modes);
    let count = noise.modes.unwrap_or(dirs.len());
    if count > dirs.len() {
        return Err(Error::Config(format!(
            "tamed_nse drives at most {} noise directions, got {count}",
            dirs.len()
        )));
    }
    dirs.truncate(count);
    let q = vec![noise.q0 * 2f64.powf(-noise.decay); count];
    let noise = NoiseSpec::new(q, noise.mu, noise.lambda, NoiseBasis::Vectors(dirs))?;
    let s2 = drift.sup_constant().powi(2);
    let lip = noise.lipschitz_bound(&space);
    let constants = ModelConstants {
        alpha: 2.0,
        beta: 6.0,
        gamma: 4.0,
        // coercivity: max(ν/2, 2(N+1)/ν) with a factor 2; monotonicity: 2ν
        c0: (2.0 * f64::max(0.5 * nu, 2.0 * (taming_n + 1.0) / nu) + noise.hs_bound(&space))
            .max(2.0 * nu + lip),
        c: 0.5 * nu,
        growth: 3.0 * (nu * nu).max(s2).max(s2 * s2 / (nu * nu)),
        weight_bound: 2.0 * (4.0 * s2 / nu + 16.0 * s2 * s2 / (nu * nu * nu)),
    };
    ModelSpec::new("tamed_nse", space, Arc::new(drift), noise, constants)
}
