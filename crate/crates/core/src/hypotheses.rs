//! Randomized audits of the five structural conditions on `(A, B)`.
//!
//! A finite sample can only falsify: a negative margin comes with a witness
//! that reproduces it, while nonnegative margins certify nothing beyond the
//! samples drawn. Constants are the smallest values that would have
//! certified every sample.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::hilbert::{SpectralField, VNorm};
use crate::models::ModelSpec;
use crate::rng::{Domain, Stream};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Default sampling radii in `H`, inside and outside the unit ball.
pub const DEFAULT_RADII: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Coarse λ-grid on `[−1, 1]` and finest step of the hemicontinuity zoom.
const H1_COARSE: usize = 16;
const H1_FINEST_LEVEL: u32 = 10;
const H1_BEAM: usize = 4;
const H1_TOL: f64 = 1e-6;

/// Test directions for the sampled dual norm.
const DUAL_DIRECTIONS: usize = 8;

/// Relative size of the perturbation in nearby H2 pairs.
const NEAR_PAIR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hypothesis {
    Hemicontinuity,
    LocalMonotonicity,
    Coercivity,
    Growth,
    Lipschitz,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 5] = [
        Self::Hemicontinuity,
        Self::LocalMonotonicity,
        Self::Coercivity,
        Self::Growth,
        Self::Lipschitz,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Hemicontinuity => "H1",
            Self::LocalMonotonicity => "H2",
            Self::Coercivity => "H3",
            Self::Growth => "H4",
            Self::Lipschitz => "H5",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Fields achieving the worst margin. `v` and `x` are unused by the
/// one-point checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub sample: usize,
    pub u: SpectralField,
    pub v: SpectralField,
    pub x: SpectralField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub hypothesis: Hypothesis,
    pub seed: u64,
    pub samples: usize,
    /// Signed; negative means some sample violates the declared bound.
    pub worst_margin: f64,
    pub violations: usize,
    /// Smallest constant certifying all samples: the multiplier on the
    /// declared bound for H2, `C₀` for H3, `C` for H4, the Lipschitz ratio
    /// for H5, the largest jump estimate for H1.
    pub constant: f64,
    /// `true` when the dual norm behind H4 is only a sampled lower bound.
    pub lower_bound: bool,
    pub witness: Option<Witness>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Gaussian coefficients with amplitude `|k|^{-decay}` (`1` at `k = 0`),
/// mapped onto the model's admissible subspace and rescaled to one of
/// `radii` in `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSampler {
    pub seed: u64,
    pub decay: f64,
    pub radii: Vec<f64>,
}

impl FieldSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            decay: 1.0,
            radii: DEFAULT_RADII.to_vec(),
        }
    }

    /// Direction of unit `H`-norm drawn from stream `stream`.
    pub fn direction(&self, model: &ModelSpec, stream: u64) -> SpectralField {
        let space = model.space();
        let mut s = Stream::new(self.seed, Domain::FieldSampler, stream);
        loop {
            let raw: Vec<f64> = space
                .k2()
                .iter()
                .map(|k2| {
                    let amp = if *k2 == 0.0 { 1.0 } else { k2.powf(-0.5 * self.decay) };
                    amp * s.next_normal()
                })
                .collect();
            let f = SpectralField::from_vec(model.drift_op().admissible(raw));
            let r = space.norm_h_raw(f.coeffs());
            if r > 0.0 && r.is_finite() {
                return f.scaled(1.0 / r);
            }
        }
    }

    /// Field number `role` of sample `index`.
    pub fn sample(&self, model: &ModelSpec, index: usize, role: usize) -> SpectralField {
        let radius = self.radii[(index + role) % self.radii.len()];
        self.direction(model, (index as u64) * 8 + role as u64).scaled(radius)
    }
}

struct Eval {
    margin: f64,
    ratio: f64,
    witness: Witness,
}

fn reduce(hypothesis: Hypothesis, seed: u64, evals: Vec<Eval>, lower_bound: bool) -> AuditReport {
    let samples = evals.len();
    let violations = evals.iter().filter(|e| e.margin < 0.0).count();
    let constant = evals.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let worst = evals
        .into_iter()
        .reduce(|a, b| if b.margin < a.margin { b } else { a });
    AuditReport {
        hypothesis,
        seed,
        samples,
        worst_margin: worst.as_ref().map_or(0.0, |w| w.margin),
        violations,
        constant,
        lower_bound,
        witness: worst.map(|w| w.witness),
    }
}

fn collect<E: Executor>(exec: &E, count: usize, f: impl Fn(usize) -> Result<Eval> + Sync + Send) -> Result<Vec<Eval>> {
    exec.map_indexed(count, f).into_iter().collect()
}

fn drift(model: &ModelSpec, u: &SpectralField) -> Result<SpectralField> {
    model.drift(0.0, u)
}

/// `max` of absolute second differences of `f` at `centers ± h`.
fn zoom_level(
    f: &impl Fn(f64) -> Result<f64>,
    centers: &[f64],
    h: f64,
    keep: usize,
) -> Result<(f64, Vec<f64>, f64)> {
    let mut scored = Vec::new();
    let mut fmax: f64 = 0.0;
    for &c in centers {
        // stencil points c − 2h … c + 2h; second differences at c − h, c, c + h
        let vals: Vec<f64> = (-2..=2).map(|m| f(c + m as f64 * h)).collect::<Result<_>>()?;
        fmax = vals.iter().fold(fmax, |a, v| a.max(v.abs()));
        for m in 1..4 {
            let d2 = (vals[m - 1] - 2.0 * vals[m] + vals[m + 1]).abs();
            scored.push((d2, c + (m as f64 - 2.0) * h));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let best = scored.first().map_or(0.0, |s| s.0);
    let mut next: Vec<f64> = Vec::new();
    for (_, x) in scored {
        if next.len() == keep {
            break;
        }
        if !next.contains(&x) {
            next.push(x);
        }
    }
    Ok((best, next, fmax))
}

/// Jump estimate of `λ ↦ f(λ)` on `[−1, 1]`: second differences shrink like
/// `h²` where `f` is smooth and stay of jump size across a discontinuity,
/// so `(4 S_h − S_{2h}) / 3` on the two finest levels of a beam search
/// isolates the jump. Returns `(jump, max |f|)`.
pub fn jump_estimate(f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let h0 = 2.0 / H1_COARSE as f64;
    let grid: Vec<f64> = (0..=H1_COARSE).map(|i| -1.0 + i as f64 * h0).collect();
    let vals: Vec<f64> = grid.iter().map(|&l| f(l)).collect::<Result<_>>()?;
    let mut fmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut scored: Vec<(f64, f64)> = (1..H1_COARSE)
        .map(|i| ((vals[i - 1] - 2.0 * vals[i] + vals[i + 1]).abs(), grid[i]))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut centers: Vec<f64> = scored.iter().take(H1_BEAM).map(|s| s.1).collect();
    let mut prev = scored.first().map_or(0.0, |s| s.0);
    let mut h = h0;
    let mut cur = prev;
    // h0 = 2^{-3}
    for _ in 4..=H1_FINEST_LEVEL {
        h *= 0.5;
        let (s, next, m) = zoom_level(&f, &centers, h, H1_BEAM)?;
        fmax = fmax.max(m);
        prev = cur;
        cur = s;
        centers = next;
    }
    Ok((((4.0 * cur - prev) / 3.0).max(0.0), fmax))
}

fn h1_margin(model: &ModelSpec, u: &SpectralField, v: &SpectralField, x: &SpectralField) -> Result<(f64, f64)> {
    let space = model.space();
    let f = |l: f64| {
        let mut w = u.clone();
        w.axpy(l, v);
        Ok(space.inner_h_raw(drift(model, &w)?.coeffs(), x.coeffs()))
    };
    let (jump, fmax) = jump_estimate(f)?;
    Ok((H1_TOL * (1.0 + fmax) - jump, jump))
}

/// Hemicontinuity: `λ ↦ ⟨A(u + λv), x⟩` has no jump on `[−1, 1]` above
/// `1e-6 (1 + max|·|)`.
pub fn check_hemicontinuity<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    require(count >= 1, "H1 needs at least one sample")?;
    let evals = collect(exec, count, |i| {
        let (u, v, x) = (sampler.sample(model, i, 0), sampler.sample(model, i, 1), sampler.sample(model, i, 2));
        let (margin, jump) = h1_margin(model, &u, &v, &x)?;
        Ok(Eval {
            margin,
            ratio: jump,
            witness: Witness { sample: i, u, v, x },
        })
    })?;
    Ok(reduce(Hypothesis::Hemicontinuity, sampler.seed, evals, false))
}

/// `(m, b)` with `m = 2⟨A(u) − A(v), u − v⟩ + ‖B(u) − B(v)‖²` and
/// `b = [C₀ + ρ(u) + η(v)] |u − v|²_H`.
pub fn monotonicity_terms(model: &ModelSpec, u: &SpectralField, v: &SpectralField) -> Result<(f64, f64)> {
    let space = model.space();
    let w = u.sub(v);
    let da = drift(model, u)?.sub(&drift(model, v)?);
    let m = 2.0 * space.dual_pairing(&da, &w)? + model.noise_hs_diff_sq(u, v);
    let b = (model.constants().c0 + model.rho(u) + model.eta(v)) * space.inner_h_raw(w.coeffs(), w.coeffs());
    Ok((m, b))
}

fn h2_pair(model: &ModelSpec, sampler: &FieldSampler, i: usize) -> (SpectralField, SpectralField) {
    let u = sampler.sample(model, i, 0);
    let v = if i % 2 == 0 {
        sampler.sample(model, i, 1)
    } else {
        let r = model.space().norm_h_raw(u.coeffs());
        let mut v = u.clone();
        v.axpy(NEAR_PAIR * r, &sampler.direction(model, i as u64 * 8 + 1));
        v
    };
    (u, v)
}

/// Local monotonicity on random pairs, half of them independent and half
/// within relative distance `1e-2`.
pub fn check_local_monotonicity<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    require(count >= 2, "H2 needs at least two samples")?;
    let evals = collect(exec, count, |i| {
        let (u, v) = h2_pair(model, sampler, i);
        let (m, b) = monotonicity_terms(model, &u, &v)?;
        Ok(Eval {
            margin: b - m,
            ratio: if b > 0.0 { m / b } else { 0.0 },
            witness: Witness { sample: i, x: u.clone(), u, v },
        })
    })?;
    Ok(reduce(Hypothesis::LocalMonotonicity, sampler.seed, evals, false))
}

/// `c‖u‖^α_V + 2⟨A(u), u⟩ + ‖B(u)‖²`, the part bounded by `C₀(1 + |u|²)`.
fn coercive_load(model: &ModelSpec, u: &SpectralField) -> Result<f64> {
    let space = model.space();
    let a = drift(model, u)?;
    Ok(model.constants().c * space.norm_v_pow_alpha_raw(u.coeffs())
        + 2.0 * space.dual_pairing(&a, u)?
        + model.noise_hs_sq(u))
}

fn h3_margin(model: &ModelSpec, u: &SpectralField) -> Result<(f64, f64)> {
    let load = coercive_load(model, u)?;
    let scale = 1.0 + model.space().inner_h_raw(u.coeffs(), u.coeffs());
    Ok((model.constants().c0 * scale - load, load / scale))
}

pub fn check_coercivity<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    require(count >= 1, "H3 needs at least one sample")?;
    let evals = collect(exec, count, |i| {
        // the zero field is always probed
        let u = if i == 0 { model.space().zeros() } else { sampler.sample(model, i, 0) };
        let (margin, ratio) = h3_margin(model, &u)?;
        Ok(Eval {
            margin,
            ratio,
            witness: Witness { sample: i, v: u.clone(), x: u.clone(), u },
        })
    })?;
    Ok(reduce(Hypothesis::Coercivity, sampler.seed, evals, false))
}

/// `‖a‖_{V*}` and whether it is only a lower bound. Weighted `V`: exact.
/// Otherwise the best ratio `⟨a, w⟩ / ‖w‖_V` over `w = u` and sampled
/// directions.
pub fn dual_norm_estimate(
    model: &ModelSpec,
    sampler: &FieldSampler,
    a: &SpectralField,
    u: &SpectralField,
    stream: u64,
) -> Result<(f64, bool)> {
    let space = model.space();
    if let Some(n) = space.dual_norm(a)? {
        return Ok((n, false));
    }
    let mut best: f64 = 0.0;
    let probe = |w: &SpectralField, best: &mut f64| -> Result<()> {
        let nv = space.norm_v(w)?;
        if nv > 0.0 {
            *best = best.max(space.dual_pairing(a, w)?.abs() / nv);
        }
        Ok(())
    };
    probe(u, &mut best)?;
    probe(a, &mut best)?;
    for d in 0..DUAL_DIRECTIONS as u64 {
        probe(&sampler.direction(model, stream * 64 + 16 + d), &mut best)?;
    }
    Ok((best, true))
}

fn growth_terms(model: &ModelSpec, sampler: &FieldSampler, u: &SpectralField, stream: u64) -> Result<(f64, f64, bool)> {
    let space = model.space();
    let k = model.constants();
    let a = drift(model, u)?;
    let (dual, lower) = dual_norm_estimate(model, sampler, &a, u, stream)?;
    let lhs = dual.powf(k.alpha / (k.alpha - 1.0));
    let rhs = (1.0 + space.norm_v_pow_alpha_raw(u.coeffs())) * (1.0 + space.norm_h_raw(u.coeffs()).powf(k.beta));
    Ok((lhs, rhs, lower))
}

/// Growth with the declared `β` and constant.
pub fn check_growth<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    require(count >= 2, "H4 needs at least two samples")?;
    let lower = matches!(model.space().v_norm_kind(), VNorm::GradientLp { .. });
    let evals = collect(exec, count, |i| {
        let u = sampler.sample(model, i, 0);
        let (lhs, rhs, _) = growth_terms(model, sampler, &u, i as u64)?;
        Ok(Eval {
            margin: model.constants().growth * rhs - lhs,
            ratio: lhs / rhs,
            witness: Witness { sample: i, v: u.clone(), x: u.clone(), u },
        })
    })?;
    Ok(reduce(Hypothesis::Growth, sampler.seed, evals, lower))
}

fn lipschitz_terms(model: &ModelSpec, u: &SpectralField, v: &SpectralField) -> Result<(f64, f64)> {
    let space = model.space();
    let c0 = model.constants().c0;
    let w = u.sub(v);
    let d2 = space.inner_h_raw(w.coeffs(), w.coeffs());
    let diff = model.noise_hs_diff_sq(u, v);
    let bound = model.noise_hs_sq(u);
    let margin = (c0 * d2 - diff).min(c0 * (1.0 + space.inner_h_raw(u.coeffs(), u.coeffs())) - bound);
    Ok((margin, diff / d2))
}

/// Lipschitz and linear-growth bounds on the noise. Coincident pairs are
/// skipped.
pub fn check_lipschitz<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    require(count >= 2, "H5 needs at least two samples")?;
    let evals: Vec<Option<Eval>> = exec
        .map_indexed(count, |i| {
            let (u, v) = h2_pair(model, sampler, i);
            if u == v {
                return Ok(None);
            }
            let (margin, ratio) = lipschitz_terms(model, &u, &v)?;
            Ok(Some(Eval {
                margin,
                ratio,
                witness: Witness { sample: i, x: u.clone(), u, v },
            }))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(reduce(Hypothesis::Lipschitz, sampler.seed, evals.into_iter().flatten().collect(), false))
}

/// H4 and H5 together.
pub fn check_growth_and_lipschitz<E: Executor>(
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<(AuditReport, AuditReport)> {
    Ok((
        check_growth(model, sampler, count, exec)?,
        check_lipschitz(model, sampler, count, exec)?,
    ))
}

pub fn audit<E: Executor>(
    hypothesis: Hypothesis,
    model: &ModelSpec,
    sampler: &FieldSampler,
    count: usize,
    exec: &E,
) -> Result<AuditReport> {
    match hypothesis {
        Hypothesis::Hemicontinuity => check_hemicontinuity(model, sampler, count, exec),
        Hypothesis::LocalMonotonicity => check_local_monotonicity(model, sampler, count, exec),
        Hypothesis::Coercivity => check_coercivity(model, sampler, count, exec),
        Hypothesis::Growth => check_growth(model, sampler, count, exec),
        Hypothesis::Lipschitz => check_lipschitz(model, sampler, count, exec),
    }
}

/// Recomputes the margin stored for the report's witness.
pub fn reevaluate(model: &ModelSpec, sampler: &FieldSampler, report: &AuditReport) -> Result<f64> {
    let Some(w) = &report.witness else {
        return Ok(report.worst_margin);
    };
    Ok(match report.hypothesis {
        Hypothesis::Hemicontinuity => h1_margin(model, &w.u, &w.v, &w.x)?.0,
        Hypothesis::LocalMonotonicity => {
            let (m, b) = monotonicity_terms(model, &w.u, &w.v)?;
            b - m
        }
        Hypothesis::Coercivity => h3_margin(model, &w.u)?.0,
        Hypothesis::Growth => {
            let (lhs, rhs, _) = growth_terms(model, sampler, &w.u, w.sample as u64)?;
            model.constants().growth * rhs - lhs
        }
        Hypothesis::Lipschitz => lipschitz_terms(model, &w.u, &w.v)?.0,
    })
}

/// `a` and `b` agree within `factor`; both negligible counts as agreement.
pub fn within_factor(a: f64, b: f64, factor: f64) -> bool {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    hi <= 1e-300 || (lo > 0.0 && hi / lo < factor)
}

fn require(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}
