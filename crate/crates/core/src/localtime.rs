//! Functionals of the reflection approximant: total variation, the
//! variational-inequality sum and the boundary-support leak.
//!
//! All Riemann–Stieltjes sums pair the left-endpoint state `X(t_j)` with the
//! increment `ΔL_j` over `[t_j, t_{j+1})`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::hilbert::{SpaceSpec, SpectralField};
use crate::models::ModelSpec;
use crate::penalize::PathRecord;
use crate::rng::{Domain, Stream};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Slack on `|φ(t)|_H ≤ 1`.
const BALL_SLACK: f64 = 1e-12;

/// Harmonics used by the random test paths.
pub const TEST_HARMONICS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionSummary {
    pub total_variation: f64,
    /// `|ΔL_j|_H`.
    pub masses: Vec<f64>,
    /// Upper edges of the `|X|_H` bins; the last bin is open-ended.
    pub profile_edges: Vec<f64>,
    /// `Σ |ΔL_j|` over steps whose `|X(t_j)|_H` falls in each bin.
    pub support_profile: Vec<f64>,
}

pub fn masses(space: &SpaceSpec, path: &PathRecord) -> Vec<f64> {
    path.l_increments.iter().map(|d| space.norm_h_raw(d.coeffs())).collect()
}

/// `Σ_j |ΔL_j|_H`: the variation of the piecewise-constant `Lⁿ`.
pub fn total_variation(space: &SpaceSpec, path: &PathRecord) -> f64 {
    masses(space, path).iter().sum()
}

/// Summary with `bins` equal bins of `|X|_H` on `[0, 1 + 1/bins·…)`: bin
/// width `1/bins`, plus one open bin for everything above `1 + 1/bins`.
pub fn summarize(space: &SpaceSpec, path: &PathRecord, bins: usize) -> ReflectionSummary {
    let bins = bins.max(1);
    let masses = masses(space, path);
    let width = 1.0 / bins as f64;
    let profile_edges: Vec<f64> = (1..=bins + 1).map(|i| i as f64 * width).chain([f64::INFINITY]).collect();
    let mut support_profile = vec![0.0; profile_edges.len()];
    for (x, m) in path.states.iter().zip(&masses) {
        let r = space.norm_h_raw(x.coeffs());
        let b = profile_edges.iter().position(|e| r < *e).unwrap_or(profile_edges.len() - 1);
        support_profile[b] += m;
    }
    ReflectionSummary {
        total_variation: masses.iter().sum(),
        masses,
        profile_edges,
        support_profile,
    }
}

/// A continuous ball-valued test path `φ(t) = Σ_h c_h(t) v_h` with
/// `c = (1, cos ωt, sin ωt, cos 2ωt, …)`, `ω = 2π / period`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPath {
    vectors: Vec<SpectralField>,
    period: f64,
}

impl TestPath {
    pub fn constant(v: SpectralField) -> Self {
        Self {
            vectors: vec![v],
            period: 1.0,
        }
    }

    /// `vectors[0]` is the mean, then cosine/sine pairs.
    pub fn harmonic(vectors: Vec<SpectralField>, period: f64) -> Result<Self> {
        if vectors.is_empty() || vectors.len() % 2 == 0 {
            return Err(Error::Config("harmonic test path needs 1 + 2J vectors".into()));
        }
        if !(period > 0.0) {
            return Err(Error::Config(format!("test path period {period} must be positive")));
        }
        Ok(Self { vectors, period })
    }

    pub fn terms(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[SpectralField] {
        &self.vectors
    }

    fn weights_into(&self, t: f64, out: &mut [f64]) {
        out[0] = 1.0;
        let w = 2.0 * PI * t / self.period;
        for j in 1..=(self.vectors.len() / 2) {
            let (s, c) = (j as f64 * w).sin_cos();
            out[2 * j - 1] = c;
            out[2 * j] = s;
        }
    }

    pub fn value(&self, t: f64) -> SpectralField {
        let mut c = vec![0.0; self.vectors.len()];
        self.weights_into(t, &mut c);
        let mut out = SpectralField::zeros(self.vectors[0].len());
        for (c, v) in c.iter().zip(&self.vectors) {
            out.axpy(*c, v);
        }
        out
    }

    fn gram(&self, space: &SpaceSpec) -> Vec<f64> {
        let m = self.vectors.len();
        let mut g = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let x = space.inner_h_raw(self.vectors[a].coeffs(), self.vectors[b].coeffs());
                g[a * m + b] = x;
                g[b * m + a] = x;
            }
        }
        g
    }

    /// `max_j |φ(t_j)|_H` over the given times.
    pub fn max_norm(&self, space: &SpaceSpec, times: &[f64]) -> f64 {
        let m = self.vectors.len();
        let g = self.gram(space);
        let mut c = vec![0.0; m];
        let mut worst: f64 = 0.0;
        for &t in times {
            self.weights_into(t, &mut c);
            let mut q = 0.0;
            for a in 0..m {
                for b in 0..m {
                    q += c[a] * g[a * m + b] * c[b];
                }
            }
            worst = worst.max(q.max(0.0).sqrt());
        }
        worst
    }

    /// Errors unless `|φ(t_j)|_H ≤ 1` at every time.
    pub fn validate(&self, space: &SpaceSpec, times: &[f64]) -> Result<()> {
        let r = self.max_norm(space, times);
        if r > 1.0 + BALL_SLACK {
            Err(Error::Precondition(format!("test path leaves the unit ball (|phi|_H = {r})")))
        } else {
            Ok(())
        }
    }
}

/// `Σ_j (φ(t_j) − X(t_j), ΔL_j)_H`.
pub fn variational_gap(space: &SpaceSpec, path: &PathRecord, test: &TestPath) -> Result<f64> {
    check_len(space.len(), test.vectors[0].len())?;
    let times = path.times();
    test.validate(space, &times)?;
    Ok(path
        .l_increments
        .iter()
        .enumerate()
        .map(|(j, dl)| {
            let d = test.value(times[j]).sub(&path.states[j]);
            space.inner_h_raw(d.coeffs(), dl.coeffs())
        })
        .sum())
}

/// The gap against `φ(t_j) = π(X(t_j))`. For the explicit stepper every
/// term is `n dt |X − π(X)|²_H` and the sum is nonnegative in floating
/// point as well.
pub fn shadow_gap(space: &SpaceSpec, path: &PathRecord) -> f64 {
    path.l_increments
        .iter()
        .zip(&path.states)
        .map(|(dl, x)| {
            let r = space.norm_h_raw(x.coeffs());
            if r <= 1.0 {
                return 0.0;
            }
            let d: Vec<f64> = x.coeffs().iter().map(|x| x / r - x).collect();
            space.inner_h_raw(&d, dl.coeffs())
        })
        .sum()
}

/// `ψ_δ(r) = (1 − δ − r)²` below `1 − δ`, zero above.
pub fn psi(delta: f64, r: f64) -> f64 {
    let s = 1.0 - delta - r;
    if s > 0.0 {
        s * s
    } else {
        0.0
    }
}

/// `Σ_j ψ_δ(|X(t_j)|_H) |ΔL_j|_H`.
pub fn boundary_leak(space: &SpaceSpec, path: &PathRecord, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(path
        .l_increments
        .iter()
        .zip(&path.states)
        .map(|(dl, x)| psi(delta, space.norm_h_raw(x.coeffs())) * space.norm_h_raw(dl.coeffs()))
        .sum())
}

/// Test-path family on `times`: `φ ≡ 0`, then `±b` for a fixed boundary
/// point `b`, then random harmonic paths whose coefficient vectors have
/// spectral amplitude `(1 + |k|²)^{-1/2}`, rescaled so that the largest
/// grid value has `H`-norm drawn from `[0.25, 1]` (every other path touches
/// the sphere).
pub fn make_test_paths(model: &ModelSpec, seed: u64, count: usize, times: &[f64]) -> Result<Vec<TestPath>> {
    if count == 0 {
        return Err(Error::Config("need at least one test path".into()));
    }
    let space = model.space();
    let period = times.last().copied().filter(|t| *t > 0.0).unwrap_or(1.0);
    let boundary = model.initial_state(1.0);
    let mut out = Vec::with_capacity(count);
    out.push(TestPath::constant(space.zeros()));
    for sign in [1.0, -1.0] {
        if out.len() < count {
            out.push(TestPath::constant(boundary.scaled(sign)));
        }
    }
    let drift = model.drift_op();
    let mut index = 0u64;
    while out.len() < count {
        let mut s = Stream::new(seed, Domain::TestPaths, index);
        let vectors: Vec<SpectralField> = (0..=2 * TEST_HARMONICS)
            .map(|_| {
                let raw = space
                    .k2()
                    .iter()
                    .zip(space.h_weights())
                    .map(|(k2, h)| s.next_normal() / ((1.0 + k2) * h).sqrt())
                    .collect();
                SpectralField::from_vec(drift.admissible(raw))
            })
            .collect();
        let path = TestPath::harmonic(vectors, period)?;
        let r = path.max_norm(space, times);
        let target = if index % 2 == 0 { 1.0 } else { 0.25 + 0.75 * s.next_uniform() };
        index += 1;
        if !(r > 0.0 && r.is_finite()) {
            continue;
        }
        // shave a rounding margin so the stored path passes the ball check
        let scale = target / r * (1.0 - 4.0 * f64::EPSILON);
        let vectors = path.vectors.iter().map(|v| v.scaled(scale)).collect();
        out.push(TestPath::harmonic(vectors, period)?);
    }
    Ok(out)
}

/// Evaluates `variational_gap` for many harmonic test paths against one
/// record: `Σ_h (v_h, S_h)_H − Σ_j (X_j, ΔL_j)_H` with
/// `S_h = Σ_j c_h(t_j) ΔL_j` precomputed.
#[derive(Debug, Clone)]
pub struct GapEvaluator {
    period: f64,
    terms: usize,
    sums: Vec<SpectralField>,
    base: f64,
}

impl GapEvaluator {
    pub fn new(space: &SpaceSpec, path: &PathRecord, period: f64, terms: usize) -> Self {
        let times = path.times();
        let probe = TestPath {
            vectors: vec![SpectralField::zeros(0); terms.max(1) | 1],
            period,
        };
        let terms = probe.vectors.len();
        let mut c = vec![0.0; terms];
        let mut sums = vec![space.zeros(); terms];
        let mut base = 0.0;
        for (j, dl) in path.l_increments.iter().enumerate() {
            if dl.coeffs().iter().all(|x| *x == 0.0) {
                continue;
            }
            probe.weights_into(times[j], &mut c);
            for (s, c) in sums.iter_mut().zip(&c) {
                s.axpy(*c, dl);
            }
            base += space.inner_h_raw(path.states[j].coeffs(), dl.coeffs());
        }
        Self {
            period,
            terms,
            sums,
            base,
        }
    }

    /// Gap for a test path already checked with [`TestPath::validate`].
    pub fn gap(&self, space: &SpaceSpec, test: &TestPath) -> Result<f64> {
        if test.terms() > self.terms || (test.terms() > 1 && test.period != self.period) {
            return Err(Error::Config("test path does not match the evaluator".into()));
        }
        let paired: f64 = test
            .vectors
            .iter()
            .zip(&self.sums)
            .map(|(v, s)| space.inner_h_raw(v.coeffs(), s.coeffs()))
            .sum();
        Ok(paired - self.base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::registry::{self, oracle_1d_sigma, NoiseParams};
    use crate::penalize::{simulate_path, Method, SchemeConfig};

    fn record(states: Vec<Vec<f64>>, dl: Vec<Vec<f64>>) -> PathRecord {
        let len = states[0].len();
        PathRecord {
            n: 1.0,
            dt: 1.0,
            path_index: 0,
            states: states.into_iter().map(SpectralField::from_vec).collect(),
            l_increments: dl.into_iter().map(SpectralField::from_vec).collect(),
            free_sum: SpectralField::zeros(len),
            acc: Default::default(),
        }
    }

    #[test]
    fn variation_examples() {
        let space = SpaceSpec::euclidean(2).unwrap();
        let p = record(vec![vec![0.0; 2]; 3], vec![vec![0.5, 0.0], vec![-0.5, 0.0]]);
        assert_eq!(total_variation(&space, &p), 1.0);
        let z = record(vec![vec![0.0; 2]; 3], vec![vec![0.0; 2]; 2]);
        assert_eq!(total_variation(&space, &z), 0.0);
        let s = summarize(&space, &p, 4);
        assert_eq!(s.total_variation, s.masses.iter().sum::<f64>());
        assert_eq!(s.support_profile[0], 1.0);
    }

    #[test]
    fn gap_examples() {
        let space = SpaceSpec::euclidean(2).unwrap();
        let p = record(vec![vec![1.0, 0.0], vec![0.9, 0.0]], vec![vec![-0.1, 0.0]]);
        let zero = TestPath::constant(space.zeros());
        assert!((variational_gap(&space, &p, &zero).unwrap() - 0.1).abs() < 1e-15);
        let still = record(vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![vec![0.0, 0.0]]);
        assert_eq!(variational_gap(&space, &still, &zero).unwrap(), 0.0);
        let outside = TestPath::constant(SpectralField::from_vec(vec![1.5, 0.0]));
        assert!(matches!(variational_gap(&space, &p, &outside), Err(Error::Precondition(_))));
    }

    #[test]
    fn leak_examples() {
        let space = SpaceSpec::euclidean(1).unwrap();
        let inside = record(vec![vec![0.0], vec![0.0]], vec![vec![1.0]]);
        assert!((boundary_leak(&space, &inside, 0.1).unwrap() - 0.81).abs() < 1e-15);
        let near = record(vec![vec![0.95], vec![0.95]], vec![vec![1.0]]);
        assert_eq!(boundary_leak(&space, &near, 0.1).unwrap(), 0.0);
        assert!(boundary_leak(&space, &near, 1.0).is_err());
    }

    #[test]
    fn test_path_family() {
        let m = registry::allen_cahn(8, &NoiseParams::default()).unwrap();
        let times: Vec<f64> = (0..=100).map(|j| j as f64 * 0.01).collect();
        let one = make_test_paths(&m, 3, 1, &times).unwrap();
        assert_eq!(one, vec![TestPath::constant(m.space().zeros())]);
        let a = make_test_paths(&m, 3, 40, &times).unwrap();
        assert_eq!(a, make_test_paths(&m, 3, 40, &times).unwrap());
        assert_ne!(a, make_test_paths(&m, 4, 40, &times).unwrap());
        for p in &a {
            assert!(p.max_norm(m.space(), &times) <= 1.0);
        }
        assert!((a[5].max_norm(m.space(), &times) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outward_drift_oracle() {
        // x' = κx from 0.5 reaches the boundary at ln 2; afterwards the
        // reflection cancels the drift, so Var L ≈ κ (T − ln 2)
        let kappa = 1.0;
        let m = oracle_1d_sigma(kappa, 0.0).unwrap();
        let cfg = SchemeConfig { dt: 1e-4, steps: 20_000, n: 1e3, method: Method::Explicit, seed: 0 };
        let p = simulate_path(&m, &cfg, &SpectralField::from_vec(vec![0.5]), 0).unwrap();
        let tv = total_variation(m.space(), &p);
        let want = kappa * (2.0 - core::f64::consts::LN_2);
        assert!((tv - want).abs() < 0.05 * want, "{tv} vs {want}");
        // matches n ∫|X − π(X)| dt for the explicit stepper
        assert!((tv - cfg.n * p.acc.pen_l1).abs() < 1e-9 * tv);

        let times = p.times();
        let tests = make_test_paths(&m, 1, 200, &times).unwrap();
        let ev = GapEvaluator::new(m.space(), &p, times[times.len() - 1], 1 + 2 * TEST_HARMONICS);
        for t in &tests {
            let g = ev.gap(m.space(), t).unwrap();
            assert!(g >= -1e-3 * tv);
        }
        assert!(shadow_gap(m.space(), &p) >= 0.0);
    }

    #[test]
    fn evaluator_matches_direct_sum() {
        let noise = NoiseParams { q0: 2.0, ..NoiseParams::default() };
        let m = registry::allen_cahn(8, &noise).unwrap();
        let cfg = SchemeConfig { dt: 1e-3, steps: 300, n: 50.0, method: Method::Explicit, seed: 2 };
        let p = simulate_path(&m, &cfg, &m.initial_state(0.95), 0).unwrap();
        let times = p.times();
        let tests = make_test_paths(&m, 5, 12, &times).unwrap();
        let ev = GapEvaluator::new(m.space(), &p, times[times.len() - 1], 7);
        let tv = total_variation(m.space(), &p);
        assert!(tv > 0.0);
        for t in &tests {
            let a = variational_gap(m.space(), &p, t).unwrap();
            let b = ev.gap(m.space(), t).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + tv), "{a} {b}");
        }
        let s = shadow_gap(m.space(), &p);
        let want = cfg.n * cfg.dt * p.acc.pen_l2 / cfg.dt;
        assert!(s >= 0.0 && (s - want).abs() < 1e-9 * want.max(1e-300));
        assert_eq!(boundary_leak(m.space(), &p, 0.1).unwrap(), 0.0);
    }
}
