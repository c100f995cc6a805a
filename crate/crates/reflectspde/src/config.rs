//! Experiment configuration: a TOML file whose dotted keys (`model.name`,
//! `scheme.dt`, ...) map onto the sections below.

use std::fmt;
use std::path::Path;

use reflectspde_core::models::registry::{self, ModelParams, NoiseParams, MODEL_NAMES};
use reflectspde_core::{Method, ModelSpec, SchemeConfig};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub name: String,
    pub p: f64,
    pub kappa: f64,
    pub nu: f64,
    pub taming_n: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelParams::default();
        Self {
            name: d.name,
            p: d.p,
            kappa: d.kappa,
            nu: d.nu,
            taming_n: d.taming_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceSection {
    /// Highest retained wavenumber per dimension.
    pub modes: usize,
    /// `None` takes the model's own dimension.
    pub dimension: Option<usize>,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self {
            modes: ModelParams::default().modes,
            dimension: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub modes: Option<usize>,
    pub q0: f64,
    pub decay: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let d = NoiseParams::default();
        Self {
            modes: d.modes,
            q0: d.q0,
            decay: d.decay,
            mu: d.mu,
            lambda: d.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub dt: f64,
    pub t_end: f64,
    pub method: String,
    pub seed: u64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            method: "explicit".into(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_grid: Vec<f64>,
    pub paths: usize,
    pub output: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_grid: vec![1.0, 4.0, 16.0, 64.0, 256.0],
            paths: 200,
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// `H`-norm of the model's initial direction.
    pub radius: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitySection {
    pub delta: f64,
    pub test_paths: usize,
}

impl Default for InequalitySection {
    fn default() -> Self {
        Self {
            delta: 0.1,
            test_paths: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesesSection {
    pub samples: usize,
}

impl Default for HypothesesSection {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub kappa: f64,
    pub sigma: f64,
    pub x0: f64,
    pub n_grid: Vec<f64>,
    pub paths: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            sigma: 0.5,
            x0: 0.5,
            n_grid: vec![1e2, 1e3, 1e4],
            paths: 500,
            dt: 1e-4,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniquenessSection {
    pub perturbation: f64,
    pub path_index: u64,
    /// Penalization level; `None` takes the largest `run.n_grid` entry.
    pub n: Option<f64>,
}

impl Default for UniquenessSection {
    fn default() -> Self {
        Self {
            perturbation: 1e-6,
            path_index: 0,
            n: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub space: SpaceSection,
    pub noise: NoiseSection,
    pub scheme: SchemeSection,
    pub run: RunSection,
    pub initial: InitialSection,
    pub inequality: InequalitySection,
    pub hypotheses: HypothesesSection,
    pub oracle: OracleSection,
    pub uniqueness: UniquenessSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<FieldError>);

impl ConfigError {
    fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|e| e.field.as_str())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Everything a run needs, resolved from an [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: ModelSpec,
    pub scheme: SchemeConfig,
    pub oracle_scheme: SchemeConfig,
}

fn steps_for(t_end: f64, dt: f64) -> Option<usize> {
    let s = (t_end / dt).round();
    (s >= 1.0 && (s * dt - t_end).abs() <= 1e-9 * t_end.max(1.0)).then_some(s as usize)
}

#[derive(Default)]
struct Diagnostics(Vec<FieldError>);

impl Diagnostics {
    fn add(&mut self, field: &str, message: String) {
        self.0.push(FieldError {
            field: field.into(),
            message,
        });
    }

    fn grid(&mut self, field: &str, grid: &[f64]) {
        if grid.is_empty() {
            self.add(field, "must list at least one penalization level".into());
        }
        for &n in grid {
            if !(n >= 0.0 && n.is_finite()) {
                self.add(field, format!("level {n} must be finite and >= 0"));
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::single("<file>", e.to_string().trim_end().to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<file>".to_string() } else { path };
            ConfigError::single(field, e.into_inner().to_string().trim_end().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path)
            .map_err(|e| ConfigError::single("<file>", format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| ConfigError::single("<file>", "not valid UTF-8"))?;
        Ok((Self::from_toml(text)?, bytes))
    }

    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            name: self.model.name.clone(),
            modes: self.space.modes,
            p: self.model.p,
            kappa: self.model.kappa,
            nu: self.model.nu,
            taming_n: self.model.taming_n,
        }
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            modes: self.noise.modes,
            q0: self.noise.q0,
            decay: self.noise.decay,
            mu: self.noise.mu,
            lambda: self.noise.lambda,
        }
    }

    /// Validates every field and builds the model; all diagnostics are
    /// collected before failing.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let mut d = Diagnostics::default();

        let name = self.model.name.as_str();
        if !MODEL_NAMES.contains(&name) {
            d.add("model.name", format!("unknown model {name:?}; expected one of {MODEL_NAMES:?}"));
        }
        let natural_dim = if name == "tamed_nse" { 3 } else { 1 };
        if let Some(dim) = self.space.dimension {
            if dim != natural_dim {
                d.add("space.dimension", format!("model {name:?} lives in dimension {natural_dim}, got {dim}"));
            }
        }
        for (field, v) in [
            ("noise.q0", self.noise.q0),
            ("noise.mu", self.noise.mu),
            ("noise.lambda", self.noise.lambda),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                d.add(field, format!("must be finite and >= 0, got {v}"));
            }
        }
        if !self.noise.decay.is_finite() {
            d.add("noise.decay", format!("must be finite, got {}", self.noise.decay));
        }
        let method = Method::parse(&self.scheme.method);
        if method.is_none() {
            d.add("scheme.method", format!("expected \"explicit\" or \"splitting\", got {:?}", self.scheme.method));
        }
        let dt = self.scheme.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            d.add("scheme.dt", format!("must be positive, got {dt}"));
        }
        let steps = if dt > 0.0 && self.scheme.t_end > 0.0 {
            let s = steps_for(self.scheme.t_end, dt);
            if s.is_none() {
                d.add("scheme.t_end", format!("must be a positive multiple of scheme.dt = {dt}, got {}", self.scheme.t_end));
            }
            s
        } else {
            if !(self.scheme.t_end > 0.0) {
                d.add("scheme.t_end", format!("must be positive, got {}", self.scheme.t_end));
            }
            None
        };
        d.grid("run.n_grid", &self.run.n_grid);
        if method == Some(Method::Explicit) && dt > 0.0 {
            for &n in &self.run.n_grid {
                if n * dt > 1.0 {
                    d.add(
                        "run.n_grid",
                        format!(
                            "level n = {n} with scheme.dt = {dt} gives n*dt = {} > 1, unstable under \
                             scheme.method = \"explicit\"; reduce dt or use \"splitting\"",
                            n * dt
                        ),
                    );
                }
            }
        }
        if self.run.paths < 2 {
            d.add("run.paths", format!("must be at least 2, got {}", self.run.paths));
        }
        if self.run.output.is_empty() {
            d.add("run.output", "must not be empty".into());
        }
        if !(self.initial.radius >= 0.0 && self.initial.radius <= 1.0) {
            d.add("initial.radius", format!("must lie in [0, 1], got {}", self.initial.radius));
        }
        if !(self.inequality.delta > 0.0 && self.inequality.delta < 1.0) {
            d.add("inequality.delta", format!("must lie in (0, 1), got {}", self.inequality.delta));
        }
        if self.hypotheses.samples == 0 {
            d.add("hypotheses.samples", "must be positive".into());
        }
        if !(self.uniqueness.perturbation >= 0.0 && self.uniqueness.perturbation <= 1.0) {
            d.add("uniqueness.perturbation", format!("must lie in [0, 1], got {}", self.uniqueness.perturbation));
        }
        if let Some(n) = self.uniqueness.n {
            if !(n >= 0.0 && n.is_finite()) {
                d.add("uniqueness.n", format!("must be finite and >= 0, got {n}"));
            } else if method == Some(Method::Explicit) && n * dt > 1.0 {
                d.add("uniqueness.n", format!("n*dt = {} > 1 is unstable under explicit stepping", n * dt));
            }
        }

        let o = &self.oracle;
        for (field, v) in [("oracle.kappa", o.kappa), ("oracle.sigma", o.sigma)] {
            if !v.is_finite() {
                d.add(field, format!("must be finite, got {v}"));
            }
        }
        if !(o.x0.abs() <= 1.0) {
            d.add("oracle.x0", format!("must lie in [-1, 1], got {}", o.x0));
        }
        if o.paths < 2 {
            d.add("oracle.paths", format!("must be at least 2, got {}", o.paths));
        }
        let oracle_steps = if o.dt > 0.0 && o.dt.is_finite() {
            let s = steps_for(o.t_end, o.dt);
            if s.is_none() {
                d.add("oracle.t_end", format!("must be a positive multiple of oracle.dt = {}, got {}", o.dt, o.t_end));
            }
            s
        } else {
            d.add("oracle.dt", format!("must be positive, got {}", o.dt));
            None
        };
        if method == Some(Method::Explicit) && o.dt > 0.0 {
            for &n in &o.n_grid {
                if n * o.dt > 1.0 {
                    d.add(
                        "oracle.n_grid",
                        format!("level n = {n} gives n*dt = {} > 1, unstable under explicit stepping", n * o.dt),
                    );
                }
            }
        }
        d.grid("oracle.n_grid", &o.n_grid);

        let model = if MODEL_NAMES.contains(&name) {
            match registry::build(&self.model_params(), &self.noise_params()) {
                Ok(m) => Some(m),
                Err(e) => {
                    d.add("model", e.to_string());
                    None
                }
            }
        } else {
            None
        };

        match (d.0.is_empty(), model, method, steps, oracle_steps) {
            (true, Some(model), Some(method), Some(steps), Some(oracle_steps)) => Ok(Resolved {
                model,
                scheme: SchemeConfig {
                    dt,
                    steps,
                    n: self.run.n_grid[0],
                    method,
                    seed: self.scheme.seed,
                },
                oracle_scheme: SchemeConfig {
                    dt: o.dt,
                    steps: oracle_steps,
                    n: o.n_grid[0],
                    method,
                    seed: self.scheme.seed,
                },
            }),
            _ => Err(ConfigError(d.0)),
        }
    }
}
