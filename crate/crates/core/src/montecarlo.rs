//! Coupled ensembles across penalization levels.
//!
//! Path `p` at every level `n` consumes the same Brownian increments
//! (common random numbers), so differences between levels are pathwise.
//! Per-path work is pure; reductions run in `(n, path_index)` order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::hilbert::{SpaceSpec, SpectralField};
use crate::localtime::{self, GapEvaluator, TestPath};
use crate::models::registry::oracle_1d_sigma;
use crate::models::ModelSpec;
use crate::penalize::{PathRecord, SchemeConfig, Stepper};
use crate::rng::{fill_increments, Domain, Philox};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Number of contiguous path batches behind every standard error.
pub const BATCHES: usize = 10;

/// Mean over all values and the standard error of the batch means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// `values[p]` is `None` for failed paths. Batches split `0..len`
/// contiguously; empty batches are dropped.
pub fn batch_estimate(values: &[Option<f64>]) -> Estimate {
    let m = values.len();
    let batches = BATCHES.min(m).max(1);
    let mut means = Vec::with_capacity(batches);
    let (mut total, mut count) = (0.0, 0usize);
    for b in 0..batches {
        let (lo, hi) = (b * m / batches, (b + 1) * m / batches);
        let ok: Vec<f64> = values[lo..hi].iter().flatten().copied().collect();
        if !ok.is_empty() {
            means.push(ok.iter().sum::<f64>() / ok.len() as f64);
            total += ok.iter().sum::<f64>();
            count += ok.len();
        }
    }
    if count == 0 {
        return Estimate { mean: f64::NAN, se: f64::NAN };
    }
    let mean = total / count as f64;
    let se = if means.len() < 2 {
        0.0
    } else {
        let mb = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|x| (x - mb) * (x - mb)).sum::<f64>() / (means.len() - 1) as f64;
        (var / means.len() as f64).sqrt()
    };
    Estimate { mean, se }
}

/// Number of `i` with `values[i + 1] > values[i]`.
pub fn inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| !(w[1] <= w[0])).count()
}

/// Non-increasing up to `allowed` inversions.
pub fn decreasing(values: &[f64], allowed: usize) -> bool {
    inversions(values) <= allowed
}

/// `max / min` of positive values (`∞` if some value is not positive).
pub fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 && lo == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub n: f64,
    /// `E[sup_t |X|⁴_H]`
    pub sup4: Estimate,
    /// `n E[∫ |X|²_H ⟨X, X − π(X)⟩ dt]`
    pub weighted_pen: Estimate,
    /// `E[(n ∫ |X − π(X)|_H dt)²]`
    pub var2: Estimate,
    /// `n E[∫ |X − π(X)|²_H dt]`
    pub pen_l2: Estimate,
    /// `E[∫ ‖X‖^α_V dt]`
    pub v_energy: Estimate,
    /// `E[sup_t |X − π(X)|⁴_H]`
    pub pen_sup4: Estimate,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyRow {
    pub n_lo: f64,
    pub n_hi: f64,
    /// `E[sup_t |X^{n_lo} − X^{n_hi}|²_H]`
    pub supdiff2: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityRow {
    pub n: f64,
    pub path_index: u64,
    pub total_variation: f64,
    pub min_gap: f64,
    pub boundary_leak: f64,
    /// Gap against `φ = π(X)`.
    pub shadow_gap: f64,
}

/// Variational-inequality workload: shared test paths and the leak width.
#[derive(Debug, Clone)]
pub struct InequalityPlan {
    pub tests: Vec<TestPath>,
    pub delta: f64,
}

impl InequalityPlan {
    /// Builds and validates `count` test paths on the scheme's time grid.
    pub fn new(model: &ModelSpec, cfg: &SchemeConfig, seed: u64, count: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("inequality.delta = {delta} must lie in (0, 1)")));
        }
        let times: Vec<f64> = (0..=cfg.steps).map(|j| cfg.time(j)).collect();
        let tests = localtime::make_test_paths(model, seed, count, &times)?;
        for t in &tests {
            t.validate(model.space(), &times)?;
        }
        Ok(Self { tests, delta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub n_grid: Vec<f64>,
    pub paths: usize,
    pub estimates: Vec<EstimateRow>,
    pub cauchy: Vec<CauchyRow>,
    pub inequality: Vec<InequalityRow>,
}

impl EnsembleReport {
    pub fn failures(&self) -> usize {
        self.estimates.iter().map(|r| r.failures).sum()
    }
}

struct LevelStats {
    values: [f64; 6],
    inequality: Option<InequalityRow>,
}

struct PathOutcome {
    levels: Vec<Option<LevelStats>>,
    supdiff2: Vec<Option<f64>>,
}

fn level_stats(space: &SpaceSpec, rec: &PathRecord, plan: Option<&InequalityPlan>) -> Result<LevelStats> {
    let a = &rec.acc;
    let n = rec.n;
    let values = [
        a.sup_norm.powi(4),
        n * a.weighted_pen,
        (n * a.pen_l1) * (n * a.pen_l1),
        n * a.pen_l2,
        a.v_energy,
        a.sup_gap.powi(4),
    ];
    let inequality = match plan {
        None => None,
        Some(plan) => {
            let terms = plan.tests.iter().map(TestPath::terms).max().unwrap_or(1);
            let period = rec.dt * rec.steps() as f64;
            let ev = GapEvaluator::new(space, rec, period, terms);
            let mut min_gap = f64::INFINITY;
            for t in &plan.tests {
                min_gap = min_gap.min(ev.gap(space, t)?);
            }
            Some(InequalityRow {
                n,
                path_index: rec.path_index,
                total_variation: localtime::total_variation(space, rec),
                min_gap,
                boundary_leak: localtime::boundary_leak(space, rec, plan.delta)?,
                shadow_gap: localtime::shadow_gap(space, rec),
            })
        }
    };
    Ok(LevelStats { values, inequality })
}

fn sup_diff2(space: &SpaceSpec, a: &PathRecord, b: &PathRecord) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let d: Vec<f64> = x.coeffs().iter().zip(y.coeffs()).map(|(x, y)| x - y).collect();
            space.inner_h_raw(&d, &d)
        })
        .fold(0.0, f64::max)
}

fn check_grid(n_grid: &[f64], paths: usize) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::Config("run.n_grid must not be empty".into()));
    }
    if paths < 2 {
        return Err(Error::Config(format!("run.paths = {paths} must be at least 2")));
    }
    Ok(())
}

/// Simulates `paths` coupled paths at every level of `n_grid` and reduces
/// all estimators. Blow-ups are counted per level, not propagated; other
/// errors abort.
pub fn run_ensemble<E: Executor>(
    model: &ModelSpec,
    base: &SchemeConfig,
    n_grid: &[f64],
    paths: usize,
    x0: &SpectralField,
    plan: Option<&InequalityPlan>,
    exec: &E,
) -> Result<EnsembleReport> {
    check_grid(n_grid, paths)?;
    let steppers: Vec<Stepper> = n_grid
        .iter()
        .map(|&n| Stepper::new(model, base.with_n(n)))
        .collect::<Result<_>>()?;
    let space = model.space();
    let outcomes: Vec<Result<PathOutcome>> = exec.map_indexed(paths, |p| {
        let mut records: Vec<Option<PathRecord>> = Vec::with_capacity(n_grid.len());
        let mut levels = Vec::with_capacity(n_grid.len());
        for st in &steppers {
            match st.simulate(x0, p as u64) {
                Ok(rec) => {
                    levels.push(Some(level_stats(space, &rec, plan)?));
                    records.push(Some(rec));
                }
                Err(Error::BlowUp { .. } | Error::NonFinite { .. }) => {
                    levels.push(None);
                    records.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        let supdiff2 = records
            .windows(2)
            .map(|w| match (&w[0], &w[1]) {
                (Some(a), Some(b)) => Some(sup_diff2(space, a, b)),
                _ => None,
            })
            .collect();
        Ok(PathOutcome { levels, supdiff2 })
    });
    let outcomes: Vec<PathOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let estimates = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let column = |k: usize| -> Vec<Option<f64>> {
                outcomes.iter().map(|o| o.levels[i].as_ref().map(|s| s.values[k])).collect()
            };
            EstimateRow {
                n,
                sup4: batch_estimate(&column(0)),
                weighted_pen: batch_estimate(&column(1)),
                var2: batch_estimate(&column(2)),
                pen_l2: batch_estimate(&column(3)),
                v_energy: batch_estimate(&column(4)),
                pen_sup4: batch_estimate(&column(5)),
                failures: outcomes.iter().filter(|o| o.levels[i].is_none()).count(),
            }
        })
        .collect();
    let cauchy = n_grid
        .windows(2)
        .enumerate()
        .map(|(i, w)| CauchyRow {
            n_lo: w[0],
            n_hi: w[1],
            supdiff2: batch_estimate(&outcomes.iter().map(|o| o.supdiff2[i]).collect::<Vec<_>>()),
        })
        .collect();
    let inequality = (0..n_grid.len())
        .flat_map(|i| outcomes.iter().filter_map(move |o| o.levels[i].as_ref().and_then(|s| s.inequality)))
        .collect();
    Ok(EnsembleReport {
        n_grid: n_grid.to_vec(),
        paths,
        estimates,
        cauchy,
        inequality,
    })
}

/// Moment, variation and penetration estimators per level.
pub fn run_estimates<E: Executor>(
    model: &ModelSpec,
    base: &SchemeConfig,
    n_grid: &[f64],
    paths: usize,
    x0: &SpectralField,
    exec: &E,
) -> Result<Vec<EstimateRow>> {
    Ok(run_ensemble(model, base, n_grid, paths, x0, None, exec)?.estimates)
}

/// `E[sup_t |X^{n_i} − X^{n_{i+1}}|²_H]` along consecutive levels.
pub fn cauchy_study<E: Executor>(
    model: &ModelSpec,
    base: &SchemeConfig,
    n_grid: &[f64],
    paths: usize,
    x0: &SpectralField,
    exec: &E,
) -> Result<Vec<CauchyRow>> {
    if n_grid.len() < 2 {
        return Err(Error::Config("the Cauchy study needs at least two levels".into()));
    }
    Ok(run_ensemble(model, base, n_grid, paths, x0, None, exec)?.cauchy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniquenessReport {
    pub perturbation: f64,
    /// `sup_t |X(t) − X'(t)|_H`
    pub sup_diff: f64,
    pub terminal_diff: f64,
    /// `sup_diff / perturbation` (`0` for a zero perturbation).
    pub stability_factor: f64,
    /// Both runs produced identical bits everywhere.
    pub identical: bool,
}

/// Twin runs on identical noise from `x0` and from `x0` moved radially
/// inward by `perturbation` (outward from the origin when `x0 = 0`).
pub fn uniqueness_check(
    model: &ModelSpec,
    cfg: &SchemeConfig,
    x0: &SpectralField,
    perturbation: f64,
    path_index: u64,
) -> Result<UniquenessReport> {
    if !(perturbation >= 0.0 && perturbation.is_finite()) {
        return Err(Error::Precondition(format!("perturbation {perturbation} must be >= 0")));
    }
    let space = model.space();
    let r = space.norm_h(x0)?;
    let x1 = if r > 0.0 {
        x0.scaled(1.0 - perturbation / r)
    } else {
        model.initial_state(perturbation)
    };
    let st = Stepper::new(model, *cfg)?;
    let a = st.simulate(x0, path_index)?;
    let b = st.simulate(&x1, path_index)?;
    let diffs: Vec<f64> = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| space.norm_h_raw(x.sub(y).coeffs()))
        .collect();
    let sup_diff = diffs.iter().copied().fold(0.0, f64::max);
    Ok(UniquenessReport {
        perturbation,
        sup_diff,
        terminal_diff: *diffs.last().unwrap_or(&0.0),
        stability_factor: if perturbation > 0.0 { sup_diff / perturbation } else { 0.0 },
        identical: a == b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub n: f64,
    /// `E[sup_t |Xⁿ − X_oracle|]`
    pub supdiff: Estimate,
    /// `E[|Var Lⁿ − Var L_oracle|]`
    pub tv_diff: Estimate,
}

/// Projected Euler on `[−1, 1]`: `X' = clamp(X + κX dt + σ dW)`; the local
/// time increment is the clamp displacement. Returns the path and the
/// variation of its local time.
pub fn projected_euler_1d(kappa: f64, sigma: f64, cfg: &SchemeConfig, x0: f64, path_index: u64) -> (Vec<f64>, f64) {
    let gen = Philox::new(cfg.seed, Domain::Brownian);
    let mut dw = [0.0];
    let mut x = x0;
    let mut path = Vec::with_capacity(cfg.steps + 1);
    let mut tv = 0.0;
    path.push(x);
    for j in 0..cfg.steps {
        fill_increments(&gen, path_index, j as u64, cfg.dt, &mut dw);
        let y = x + kappa * x * cfg.dt + sigma * dw[0];
        x = y.clamp(-1.0, 1.0);
        tv += (x - y).abs();
        path.push(x);
    }
    (path, tv)
}

/// Penalized scheme against the projected Euler oracle on `H = ℝ`, with
/// coupled noise.
/// Per-level (sup diff, tv diff) for one path; `None` when the scheme failed.
type PathDiffs = Vec<Option<(f64, f64)>>;

pub fn oracle_compare_1d<E: Executor>(
    kappa: f64,
    sigma: f64,
    base: &SchemeConfig,
    n_grid: &[f64],
    paths: usize,
    x0: f64,
    exec: &E,
) -> Result<Vec<OracleRow>> {
    check_grid(n_grid, paths)?;
    if !(x0.abs() <= 1.0) {
        return Err(Error::Precondition(format!("oracle x0 = {x0} lies outside [-1, 1]")));
    }
    let model = oracle_1d_sigma(kappa, sigma)?;
    let steppers: Vec<Stepper> = n_grid
        .iter()
        .map(|&n| Stepper::new(&model, base.with_n(n)))
        .collect::<Result<_>>()?;
    let start = SpectralField::from_vec(vec![x0]);
    let per_path: Vec<Result<PathDiffs>> = exec.map_indexed(paths, |p| {
        let (oracle, oracle_tv) = projected_euler_1d(kappa, sigma, base, x0, p as u64);
        steppers
            .iter()
            .map(|st| match st.simulate(&start, p as u64) {
                Ok(rec) => {
                    let sup = rec
                        .states
                        .iter()
                        .zip(&oracle)
                        .map(|(x, y)| (x.coeffs()[0] - y).abs())
                        .fold(0.0, f64::max);
                    let tv = localtime::total_variation(model.space(), &rec);
                    Ok(Some((sup, (tv - oracle_tv).abs())))
                }
                Err(Error::BlowUp { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    });
    let per_path: Vec<Vec<Option<(f64, f64)>>> = per_path.into_iter().collect::<Result<_>>()?;
    Ok(n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| OracleRow {
            n,
            supdiff: batch_estimate(&per_path.iter().map(|r| r[i].map(|v| v.0)).collect::<Vec<_>>()),
            tv_diff: batch_estimate(&per_path.iter().map(|r| r[i].map(|v| v.1)).collect::<Vec<_>>()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::models::registry::{self, NoiseParams};
    use crate::models::{LinearDiagonal, ModelConstants, NoiseBasis, NoiseSpec};
    use crate::penalize::Method;
    use alloc::sync::Arc;

    fn cfg(dt: f64, steps: usize, method: Method) -> SchemeConfig {
        SchemeConfig { dt, steps, n: 0.0, method, seed: 42 }
    }

    fn linear(kappa: f64, sigma: f64) -> ModelSpec {
        let space = SpaceSpec::euclidean(1).unwrap();
        let noise = NoiseSpec::new(vec![sigma * sigma], 1.0, 0.0, NoiseBasis::Coordinates).unwrap();
        let k = ModelConstants { alpha: 2.0, beta: 0.0, gamma: 0.0, c0: 1.0 + sigma * sigma, c: 1.0, growth: 1.0, weight_bound: 0.0 };
        ModelSpec::new("linear", space, Arc::new(LinearDiagonal::new(vec![kappa])), noise, k).unwrap()
    }

    #[test]
    fn batch_means() {
        let v: Vec<Option<f64>> = (0..20).map(|i| Some(i as f64)).collect();
        let e = batch_estimate(&v);
        assert_eq!(e.mean, 9.5);
        // batch means 0.5, 2.5, …, 18.5: sd = 2·sd(0..10) = 6.0553, se = sd/√10
        assert!((e.se - 6.0553007081949835 / 10f64.sqrt()).abs() < 1e-12);
        let c = batch_estimate(&[Some(1.0), None, Some(1.0)]);
        assert_eq!((c.mean, c.se), (1.0, 0.0));
        assert!(batch_estimate(&[None, None]).mean.is_nan());
    }

    #[test]
    fn trend_helpers() {
        assert!(decreasing(&[5.0, 4.0, 4.5, 3.0], 1));
        assert!(!decreasing(&[5.0, 6.0, 4.5, 5.0], 1));
        assert!(decreasing(&[0.0, 0.0, 0.0], 0));
        assert_eq!(spread(&[1.0, 3.0, 2.0]), 3.0);
        assert_eq!(spread(&[0.0, 1.0]), f64::INFINITY);
    }

    #[test]
    fn still_model_gives_zero_estimates() {
        let m = linear(0.0, 0.0);
        let x0 = SpectralField::from_vec(vec![0.3]);
        let rows = run_estimates(&m, &cfg(1e-2, 50, Method::Explicit), &[1.0, 4.0], 4, &x0, &Sequential).unwrap();
        for r in rows {
            for e in [r.weighted_pen, r.var2, r.pen_l2, r.v_energy, r.pen_sup4] {
                assert!(e.mean == 0.0 || e == r.v_energy);
            }
            assert_eq!(r.failures, 0);
        }
    }

    #[test]
    fn outward_drift_variation_converges() {
        // Var L → κ (T − ln 2) from x0 = 0.5 for every large n
        let m = oracle_1d_sigma(1.0, 0.0).unwrap();
        let x0 = SpectralField::from_vec(vec![0.5]);
        let rows = run_estimates(&m, &cfg(1e-4, 20_000, Method::Explicit), &[1e2, 1e3, 1e4], 2, &x0, &Sequential).unwrap();
        let v: Vec<f64> = rows.iter().map(|r| r.var2.mean).collect();
        assert!(spread(&v) < 1.05, "{v:?}");
    }

    #[test]
    fn outward_drift_cauchy_differences_shrink() {
        let m = oracle_1d_sigma(1.0, 0.0).unwrap();
        let x0 = SpectralField::from_vec(vec![0.5]);
        let grid = [1e2, 4e2, 1.6e3, 6.4e3];
        let rows = cauchy_study(&m, &cfg(1e-4, 20_000, Method::Splitting), &grid, 2, &x0, &Sequential).unwrap();
        for w in rows.windows(2) {
            // squared sup differences: a factor 2 in the norm is 4 here
            assert!(w[1].supdiff2.mean * 4.0 <= w[0].supdiff2.mean, "{rows:?}");
        }
        let same = cauchy_study(&m, &cfg(1e-3, 100, Method::Splitting), &[50.0, 50.0], 2, &x0, &Sequential).unwrap();
        assert_eq!(same[0].supdiff2.mean, 0.0);
    }

    #[test]
    fn coupling_is_bitwise() {
        // n = 0 vs n = 5 coincide until the first exit from the ball
        let m = registry::allen_cahn(8, &NoiseParams::default()).unwrap();
        let x0 = m.initial_state(0.2);
        let c = cfg(1e-3, 5, Method::Explicit);
        let a = Stepper::new(&m, c.with_n(0.0)).unwrap().simulate(&x0, 3).unwrap();
        let b = Stepper::new(&m, c.with_n(5.0)).unwrap().simulate(&x0, 3).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn uniqueness_examples() {
        let m = linear(-1.0, 0.1);
        let c = SchemeConfig { n: 100.0, ..cfg(1e-3, 1000, Method::Explicit) };
        let x0 = SpectralField::from_vec(vec![0.2]);
        let zero = uniqueness_check(&m, &c, &x0, 0.0, 0).unwrap();
        assert!(zero.identical && zero.sup_diff == 0.0);
        let r = uniqueness_check(&m, &c, &x0, 1e-3, 0).unwrap();
        assert!((r.terminal_diff - 1e-3 * (-1.0f64).exp()).abs() < 1e-9);
        assert!(r.terminal_diff <= 1e-3);

        let ac = registry::allen_cahn(8, &NoiseParams::default()).unwrap();
        let c = SchemeConfig { n: 64.0, ..cfg(1e-3, 1000, Method::Explicit) };
        let r = uniqueness_check(&ac, &c, &ac.initial_state(0.9), 1e-6, 1).unwrap();
        assert!(r.sup_diff <= 1e-2);
    }

    #[test]
    fn oracle_deterministic_equilibrium_offset() {
        let c = cfg(1e-4, 20_000, Method::Explicit);
        let rows = oracle_compare_1d(0.0, 0.0, &c, &[10.0], 2, 0.4, &Sequential).unwrap();
        assert_eq!(rows[0].supdiff.mean, 0.0);
        // κ = 1: the offset settles at κ/(n − κ)
        let rows = oracle_compare_1d(1.0, 0.0, &c, &[100.0], 2, 1.0, &Sequential).unwrap();
        assert!((rows[0].supdiff.mean - 1.0 / 99.0).abs() < 2e-4, "{rows:?}");
    }

    #[test]
    fn ensemble_inequality_rows() {
        let m = registry::allen_cahn(8, &NoiseParams { q0: 1.0, ..NoiseParams::default() }).unwrap();
        let c = cfg(1e-3, 200, Method::Explicit);
        let plan = InequalityPlan::new(&m, &c, 1, 20, 0.1).unwrap();
        let rep = run_ensemble(&m, &c, &[4.0, 16.0], 4, &m.initial_state(1.0), Some(&plan), &Sequential).unwrap();
        assert_eq!(rep.inequality.len(), 8);
        assert_eq!(rep.cauchy.len(), 1);
        for r in &rep.inequality {
            assert!(r.shadow_gap >= 0.0);
            assert!(r.min_gap >= -1e-3 * r.total_variation);
            assert_eq!(r.boundary_leak, 0.0);
        }
        assert_eq!(rep, run_ensemble(&m, &c, &[4.0, 16.0], 4, &m.initial_state(1.0), Some(&plan), &Sequential).unwrap());
    }
}
