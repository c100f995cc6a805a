//! Radix-2 FFT and the real Fourier basis on the 1-D torus.
//!
//! Torus fields are expanded in the basis `{1, √2 cos kx, √2 sin kx}`,
//! which is orthonormal for the normalized measure `dx / 2π`. Coefficients
//! are stored as `[c0, a1, b1, a2, b2, ...]` (or `[a1, b1, ...]` for
//! mean-free spaces).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use num_complex::Complex64;

use crate::error::{Error, Result};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Smallest power of two strictly greater than `min`.
pub fn grid_size_above(min: usize) -> usize {
    (min + 1).next_power_of_two()
}

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Config(alloc::format!(
                "FFT length {n} is not a power of two"
            )));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let th = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(th.cos(), th.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.n);
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let t = w * data[start + k + half];
                    let u = data[start + k];
                    data[start + k] = u + t;
                    data[start + k + half] = u - t;
                }
            }
            len <<= 1;
        }
    }

    /// `X_k = Σ_j x_j e^{-2πijk/n}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// `x_j = Σ_k X_k e^{+2πijk/n}` (no `1/n` factor).
    pub fn backward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }
}

/// In-place 3-D transform of an `n³` row-major array.
pub fn fft3(fft: &Fft, data: &mut [Complex64], inverse: bool) {
    let n = fft.len();
    debug_assert_eq!(data.len(), n * n * n);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let apply = |line: &mut [Complex64]| {
        if inverse {
            fft.backward(line)
        } else {
            fft.forward(line)
        }
    };
    // last axis: contiguous
    for row in data.chunks_mut(n) {
        apply(row);
    }
    // middle axis
    for i in 0..n {
        for l in 0..n {
            for j in 0..n {
                line[j] = data[(i * n + j) * n + l];
            }
            apply(&mut line);
            for j in 0..n {
                data[(i * n + j) * n + l] = line[j];
            }
        }
    }
    // first axis
    for j in 0..n {
        for l in 0..n {
            for i in 0..n {
                line[i] = data[(i * n + j) * n + l];
            }
            apply(&mut line);
            for i in 0..n {
                data[(i * n + j) * n + l] = line[i];
            }
        }
    }
}

/// Real Fourier basis on `[0, 2π)` truncated at wavenumber `k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusBasis {
    pub k_max: usize,
    pub zero_mean: bool,
}

impl TorusBasis {
    pub fn len(&self) -> usize {
        2 * self.k_max + usize::from(!self.zero_mean)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn offset(&self) -> usize {
        usize::from(!self.zero_mean)
    }

    /// Index of `√2 cos kx` (or of the constant when `k == 0`).
    pub fn cos_index(&self, k: usize) -> Option<usize> {
        match k {
            0 if self.zero_mean => None,
            0 => Some(0),
            k if k <= self.k_max => Some(self.offset() + 2 * (k - 1)),
            _ => None,
        }
    }

    pub fn sin_index(&self, k: usize) -> Option<usize> {
        (1..=self.k_max)
            .contains(&k)
            .then(|| self.offset() + 2 * (k - 1) + 1)
    }

    /// Wavenumber of each coefficient.
    pub fn wavenumbers(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        if !self.zero_mean {
            out.push(0);
        }
        for k in 1..=self.k_max {
            out.push(k);
            out.push(k);
        }
        out
    }

    /// Spectral derivative `d/dx`.
    pub fn derivative(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; c.len()];
        let off = self.offset();
        for k in 1..=self.k_max {
            let (ia, ib) = (off + 2 * (k - 1), off + 2 * (k - 1) + 1);
            let kf = k as f64;
            out[ia] = kf * c[ib];
            out[ib] = -kf * c[ia];
        }
        out
    }
}

/// Equispaced collocation grid for a [`TorusBasis`].
#[derive(Debug, Clone)]
pub struct TorusGrid {
    basis: TorusBasis,
    fft: Fft,
}

impl TorusGrid {
    /// Grid with `n` points; `n` must be a power of two above `2 k_max`.
    pub fn new(basis: TorusBasis, n: usize) -> Result<Self> {
        if n <= 2 * basis.k_max {
            return Err(Error::Config(alloc::format!(
                "grid of {n} points cannot resolve wavenumber {}",
                basis.k_max
            )));
        }
        Ok(Self {
            basis,
            fft: Fft::new(n)?,
        })
    }

    pub fn points(&self) -> usize {
        self.fft.len()
    }

    pub fn basis(&self) -> TorusBasis {
        self.basis
    }

    /// Point values `u(2πj/n)`.
    pub fn to_grid(&self, c: &[f64]) -> Vec<f64> {
        let n = self.points();
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        if let Some(i0) = self.basis.cos_index(0) {
            spec[0] = Complex64::new(c[i0], 0.0);
        }
        let off = self.basis.offset();
        for k in 1..=self.basis.k_max {
            let a = c[off + 2 * (k - 1)];
            let b = c[off + 2 * (k - 1) + 1];
            let s = Complex64::new(a * FRAC_1_SQRT_2, -b * FRAC_1_SQRT_2);
            spec[k] = s;
            spec[n - k] = s.conj();
        }
        self.fft.backward(&mut spec);
        spec.iter().map(|z| z.re).collect()
    }

    /// Truncated interpolation coefficients of grid values.
    pub fn from_grid(&self, values: &[f64]) -> Vec<f64> {
        let n = self.points();
        let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut spec);
        let inv_n = 1.0 / n as f64;
        let mut c = vec![0.0; self.basis.len()];
        if let Some(i0) = self.basis.cos_index(0) {
            c[i0] = spec[0].re * inv_n;
        }
        let off = self.basis.offset();
        for k in 1..=self.basis.k_max {
            let s = spec[k] * inv_n;
            c[off + 2 * (k - 1)] = SQRT_2 * s.re;
            c[off + 2 * (k - 1) + 1] = -SQRT_2 * s.im;
        }
        c
    }
}
