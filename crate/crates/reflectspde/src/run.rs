//! Subcommand dispatch: harness calls in, artifact files out.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use reflectspde_core::exec::Executor;
use reflectspde_core::hypotheses::{audit, AuditReport, FieldSampler, Hypothesis};
use reflectspde_core::montecarlo::{
    oracle_compare_1d, run_ensemble, uniqueness_check, CauchyRow, EnsembleReport, EstimateRow, InequalityPlan,
    InequalityRow, OracleRow, UniquenessReport,
};
use reflectspde_core::Error as CoreError;

use crate::config::{ConfigError, ExperimentConfig, Resolved};
use crate::exec::RayonExecutor;
use crate::output::{real, sha256_hex, ArtifactWriter, Manifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Estimates,
    Cauchy,
    Inequality,
    Hypotheses,
    Oracle1d,
    Uniqueness,
    All,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Self::Estimates,
        Self::Cauchy,
        Self::Inequality,
        Self::Hypotheses,
        Self::Oracle1d,
        Self::Uniqueness,
        Self::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Estimates => "estimates",
            Self::Cauchy => "cauchy",
            Self::Inequality => "inequality",
            Self::Hypotheses => "hypotheses",
            Self::Oracle1d => "oracle1d",
            Self::Uniqueness => "uniqueness",
            Self::All => "all",
        }
    }

    fn includes(self, part: Subcommand) -> bool {
        self == part || self == Self::All
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(CoreError),
    Io { path: PathBuf, source: io::Error },
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } | Self::Internal(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => e.fmt(f),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BlowUp { .. } | CoreError::NonFinite { .. } => Self::Numerical(e),
            CoreError::Config(_) | CoreError::Unsupported { .. } | CoreError::Domain(_) | CoreError::Precondition(_) => {
                Self::Config(ConfigError(vec![crate::config::FieldError {
                    field: "<run>".into(),
                    message: e.to_string(),
                }]))
            }
            CoreError::Dimension { .. } => Self::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// `(study, n, failed paths)` for every level with failures.
    pub failures: Vec<(&'static str, f64, usize)>,
}

impl RunOutcome {
    pub fn failed(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn est(row: &mut Vec<String>, e: reflectspde_core::montecarlo::Estimate) {
    row.push(real(e.mean));
    row.push(real(e.se));
}

pub const ESTIMATES_HEADER: [&str; 14] = [
    "n",
    "est_sup4",
    "se_sup4",
    "est_weighted_pen",
    "se_weighted_pen",
    "est_var2",
    "se_var2",
    "est_pen_l2",
    "se_pen_l2",
    "est_v_energy",
    "se_v_energy",
    "est_pen_sup4",
    "se_pen_sup4",
    "failures",
];
pub const CAUCHY_HEADER: [&str; 4] = ["n_lo", "n_hi", "est_supdiff2", "se"];
pub const INEQUALITY_HEADER: [&str; 5] = ["n", "path_index", "total_variation", "min_gap", "boundary_leak"];
pub const SHADOW_HEADER: [&str; 3] = ["n", "path_index", "shadow_gap"];
pub const HYPOTHESES_HEADER: [&str; 4] = ["hypothesis", "margin", "constant", "seed"];
pub const AUDIT_DETAIL_HEADER: [&str; 4] = ["hypothesis", "samples", "violations", "lower_bound"];
pub const ORACLE_HEADER: [&str; 5] = ["n", "est_supdiff", "se_supdiff", "est_tv_diff", "se_tv_diff"];
pub const UNIQUENESS_HEADER: [&str; 5] = ["perturbation", "sup_diff", "terminal_diff", "stability_factor", "identical"];

pub fn estimates_table(rows: &[EstimateRow]) -> Table {
    let mut t = Table::new(&ESTIMATES_HEADER);
    for r in rows {
        let mut row = vec![real(r.n)];
        for e in [r.sup4, r.weighted_pen, r.var2, r.pen_l2, r.v_energy, r.pen_sup4] {
            est(&mut row, e);
        }
        row.push(r.failures.to_string());
        t.push(row);
    }
    t
}

pub fn cauchy_table(rows: &[CauchyRow]) -> Table {
    let mut t = Table::new(&CAUCHY_HEADER);
    for r in rows {
        let mut row = vec![real(r.n_lo), real(r.n_hi)];
        est(&mut row, r.supdiff2);
        t.push(row);
    }
    t
}

pub fn inequality_tables(rows: &[InequalityRow]) -> (Table, Table) {
    let mut t = Table::new(&INEQUALITY_HEADER);
    let mut s = Table::new(&SHADOW_HEADER);
    for r in rows {
        t.push(vec![
            real(r.n),
            r.path_index.to_string(),
            real(r.total_variation),
            real(r.min_gap),
            real(r.boundary_leak),
        ]);
        s.push(vec![real(r.n), r.path_index.to_string(), real(r.shadow_gap)]);
    }
    (t, s)
}

pub fn hypotheses_tables(reports: &[AuditReport]) -> (Table, Table) {
    let mut t = Table::new(&HYPOTHESES_HEADER);
    let mut d = Table::new(&AUDIT_DETAIL_HEADER);
    for r in reports {
        let id = r.hypothesis.id().to_string();
        t.push(vec![id.clone(), real(r.worst_margin), real(r.constant), r.seed.to_string()]);
        d.push(vec![id, r.samples.to_string(), r.violations.to_string(), r.lower_bound.to_string()]);
    }
    (t, d)
}

pub fn oracle_table(rows: &[OracleRow]) -> Table {
    let mut t = Table::new(&ORACLE_HEADER);
    for r in rows {
        let mut row = vec![real(r.n)];
        est(&mut row, r.supdiff);
        est(&mut row, r.tv_diff);
        t.push(row);
    }
    t
}

pub fn uniqueness_table(rows: &[UniquenessReport]) -> Table {
    let mut t = Table::new(&UNIQUENESS_HEADER);
    for r in rows {
        t.push(vec![
            real(r.perturbation),
            real(r.sup_diff),
            real(r.terminal_diff),
            real(r.stability_factor),
            r.identical.to_string(),
        ]);
    }
    t
}

/// Leak-to-variation ratio pooled over paths, per level.
pub fn leak_ratios(n_grid: &[f64], rows: &[InequalityRow]) -> Vec<(f64, f64)> {
    n_grid
        .iter()
        .map(|&n| {
            let (leak, tv) = rows
                .iter()
                .filter(|r| r.n == n)
                .fold((0.0, 0.0), |(l, v), r| (l + r.boundary_leak, v + r.total_variation));
            (n, if tv > 0.0 { leak / tv } else { 0.0 })
        })
        .collect()
}

type Column = fn(&EstimateRow) -> f64;

fn write_ensemble(w: &mut ArtifactWriter, sub: Subcommand, rep: &EnsembleReport) -> io::Result<()> {
    if sub.includes(Subcommand::Estimates) {
        w.table("estimates.csv", &estimates_table(&rep.estimates))?;
        let series: [(&str, Column); 6] = [
            ("sup4", |r| r.sup4.mean),
            ("weighted_pen", |r| r.weighted_pen.mean),
            ("var2", |r| r.var2.mean),
            ("pen_l2", |r| r.pen_l2.mean),
            ("v_energy", |r| r.v_energy.mean),
            ("pen_sup4", |r| r.pen_sup4.mean),
        ];
        for (name, f) in series {
            let pts = rep.estimates.iter().map(|r| (r.n, f(r)));
            w.table(&format!("plots/{name}.csv"), &Table::series(pts))?;
        }
    }
    if sub.includes(Subcommand::Cauchy) {
        w.table("cauchy.csv", &cauchy_table(&rep.cauchy))?;
        let pts = rep.cauchy.iter().map(|r| (r.n_lo, r.supdiff2.mean));
        w.table("plots/cauchy_supdiff2.csv", &Table::series(pts))?;
    }
    if sub.includes(Subcommand::Inequality) {
        let (t, s) = inequality_tables(&rep.inequality);
        w.table("inequality.csv", &t)?;
        w.table("shadow_gap.csv", &s)?;
        w.table("plots/leak_ratio.csv", &Table::series(leak_ratios(&rep.n_grid, &rep.inequality)))?;
    }
    Ok(())
}

/// Runs `sub` end to end. Path blow-ups do not abort: every artifact is
/// written and the failures are returned for the caller to act on.
pub fn run(sub: Subcommand, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let (mut cfg, bytes) = ExperimentConfig::load(&opts.config).map_err(RunError::Config)?;
    if let Some(seed) = opts.seed {
        cfg.scheme.seed = seed;
    }
    let resolved = cfg.resolve().map_err(RunError::Config)?;
    let exec = RayonExecutor::new(opts.threads).map_err(|e| RunError::Internal(e.to_string()))?;
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.run.output));
    let mut w = ArtifactWriter::create(&out_dir).map_err(io_err(&out_dir))?;
    let failures = execute(sub, &cfg, &resolved, &exec, &mut w)?;
    let total = failures.iter().map(|f| f.2).sum();
    let manifest = w
        .finish(sub.name(), sha256_hex(&bytes), cfg.scheme.seed, total)
        .map_err(io_err(&out_dir))?;
    Ok(RunOutcome {
        out_dir,
        manifest,
        failures,
    })
}

fn execute<E: Executor>(
    sub: Subcommand,
    cfg: &ExperimentConfig,
    r: &Resolved,
    exec: &E,
    w: &mut ArtifactWriter,
) -> Result<Vec<(&'static str, f64, usize)>, RunError> {
    let dir = w.dir().to_path_buf();
    let mut failures = Vec::new();
    let seed = cfg.scheme.seed;

    let ensemble = [Subcommand::Estimates, Subcommand::Cauchy, Subcommand::Inequality]
        .into_iter()
        .any(|s| sub.includes(s));
    if ensemble {
        let plan = if sub.includes(Subcommand::Inequality) {
            Some(InequalityPlan::new(
                &r.model,
                &r.scheme,
                seed,
                cfg.inequality.test_paths,
                cfg.inequality.delta,
            )?)
        } else {
            None
        };
        let x0 = r.model.initial_state(cfg.initial.radius);
        let rep = run_ensemble(&r.model, &r.scheme, &cfg.run.n_grid, cfg.run.paths, &x0, plan.as_ref(), exec)?;
        for row in &rep.estimates {
            if row.failures > 0 {
                failures.push(("ensemble", row.n, row.failures));
            }
        }
        write_ensemble(w, sub, &rep).map_err(io_err(&dir))?;
    }

    if sub.includes(Subcommand::Hypotheses) {
        let sampler = FieldSampler::new(seed);
        let reports = Hypothesis::ALL
            .iter()
            .map(|&h| audit(h, &r.model, &sampler, cfg.hypotheses.samples, exec))
            .collect::<Result<Vec<_>, _>>()?;
        let (t, d) = hypotheses_tables(&reports);
        w.table("hypotheses.csv", &t).map_err(io_err(&dir))?;
        w.table("hypotheses_detail.csv", &d).map_err(io_err(&dir))?;
    }

    if sub.includes(Subcommand::Oracle1d) {
        let o = &cfg.oracle;
        let rows = oracle_compare_1d(o.kappa, o.sigma, &r.oracle_scheme, &o.n_grid, o.paths, o.x0, exec)?;
        w.table("oracle1d.csv", &oracle_table(&rows)).map_err(io_err(&dir))?;
        let pts = rows.iter().map(|r| (r.n, r.supdiff.mean));
        w.table("plots/oracle_supdiff.csv", &Table::series(pts)).map_err(io_err(&dir))?;
    }

    if sub.includes(Subcommand::Uniqueness) {
        let u = &cfg.uniqueness;
        let n = u
            .n
            .unwrap_or_else(|| cfg.run.n_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let scheme = r.scheme.with_n(n);
        let x0 = r.model.initial_state(cfg.initial.radius);
        let rows = [0.0, u.perturbation]
            .into_iter()
            .map(|p| uniqueness_check(&r.model, &scheme, &x0, p, u.path_index))
            .collect::<Result<Vec<_>, _>>()?;
        w.table("uniqueness.csv", &uniqueness_table(&rows)).map_err(io_err(&dir))?;
    }
    Ok(failures)
}
