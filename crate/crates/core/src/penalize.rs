//! Time stepping of the penalized equation
//! `dXⁿ = A(Xⁿ) dt + B(Xⁿ) dW − n (Xⁿ − π(Xⁿ)) dt`
//! and the reflection approximant `Lⁿ(t) = −n ∫₀ᵗ (Xⁿ − π(Xⁿ)) ds`.
//!
//! A diagonal linear part of the drift is integrated exactly: the free step
//! is `x̃ = e^{L dt} ⊙ (X + dt N(X) + B(X) dW)` with `N = A − L`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::hilbert::SpectralField;
use crate::models::ModelSpec;
use crate::rng::{fill_increments, Domain, Philox};
// inherent f64 math shadows this whenever std is linked
#[allow(unused_imports)]
use num_traits::Float;

/// Relative slack on `|x0|_H ≤ 1`.
const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Euler–Maruyama on the full equation; needs `n·dt ≤ 1`.
    Explicit,
    /// Free step followed by the exact radial penalty flow.
    Splitting,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "explicit" => Some(Self::Explicit),
            "splitting" => Some(Self::Splitting),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Explicit => "explicit",
            Self::Splitting => "splitting",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub steps: usize,
    /// Penalization level.
    pub n: f64,
    pub method: Method,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("scheme.dt = {} must be positive", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::Config("scheme needs at least one step".into()));
        }
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return Err(Error::Config(format!("penalization level n = {} must be >= 0", self.n)));
        }
        if self.method == Method::Explicit && self.n * self.dt > 1.0 {
            return Err(Error::Config(format!(
                "explicit stepping is unstable for n*dt = {} > 1 (n = {}, dt = {}); \
                 reduce dt or use method = \"splitting\"",
                self.n * self.dt,
                self.n,
                self.dt
            )));
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn with_n(&self, n: f64) -> Self {
        Self { n, ..*self }
    }

    pub fn time(&self, step: usize) -> f64 {
        self.dt * step as f64
    }
}

/// Left-endpoint time integrals and running suprema along a path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulators {
    /// `∫ |X − π(X)|_H dt`
    pub pen_l1: f64,
    /// `∫ |X − π(X)|²_H dt`
    pub pen_l2: f64,
    /// `∫ |X|²_H ⟨X, X − π(X)⟩_H dt`
    pub weighted_pen: f64,
    /// `∫ ‖X‖^α_V dt`
    pub v_energy: f64,
    /// `sup_t |X|_H`
    pub sup_norm: f64,
    /// `sup_t |X − π(X)|_H`
    pub sup_gap: f64,
}

impl Accumulators {
    fn observe(&mut self, r: f64) {
        self.sup_norm = self.sup_norm.max(r);
        self.sup_gap = self.sup_gap.max((r - 1.0).max(0.0));
    }

    fn integrate(&mut self, r: f64, v_alpha: f64, dt: f64) {
        let gap = (r - 1.0).max(0.0);
        self.pen_l1 += dt * gap;
        self.pen_l2 += dt * gap * gap;
        // ⟨X, X − π(X)⟩ = r (r − 1) outside the ball
        self.weighted_pen += dt * r * r * r * gap;
        self.v_energy += dt * v_alpha;
    }
}

/// One simulated trajectory of `(Xⁿ, Lⁿ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub n: f64,
    pub dt: f64,
    pub path_index: u64,
    /// `Xⁿ(t_j)`, `j = 0..=steps`.
    pub states: Vec<SpectralField>,
    /// `ΔLⁿ_j` over `[t_j, t_{j+1})`.
    pub l_increments: Vec<SpectralField>,
    /// `Σ_j (x̃_j − X_j)`: all drift and noise increments.
    pub free_sum: SpectralField,
    pub acc: Accumulators,
}

impl PathRecord {
    pub fn steps(&self) -> usize {
        self.l_increments.len()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|j| self.dt * j as f64).collect()
    }

    pub fn terminal(&self) -> &SpectralField {
        self.states.last().expect("a path has at least its initial state")
    }

    /// `Lⁿ(T)`.
    pub fn l_total(&self) -> SpectralField {
        let mut l = SpectralField::zeros(self.free_sum.len());
        for d in &self.l_increments {
            l.axpy(1.0, d);
        }
        l
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: SpectralField,
    pub dl: SpectralField,
    /// Drift and noise part `x̃ − X`.
    pub free: SpectralField,
}

/// Stepper with the linear propagator precomputed.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    model: &'a ModelSpec,
    cfg: SchemeConfig,
    propagator: Option<Vec<f64>>,
    decay: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ModelSpec, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let propagator = model
            .drift_op()
            .linear_part()
            .map(|l| l.iter().map(|l| (l * cfg.dt).exp()).collect());
        Ok(Self {
            model,
            cfg,
            propagator,
            decay: (-cfg.n * cfg.dt).exp(),
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// `x̃ = e^{L dt} ⊙ (X + dt N(X) + B(X) dW)`.
    pub fn free_step(&self, t: f64, state: &SpectralField, dw: &[f64]) -> Result<SpectralField> {
        let space = self.model.space();
        space.check(state)?;
        check_len(self.model.noise().mode_count(), dw.len())?;
        let drift = self.model.drift_op();
        let a = match self.propagator {
            Some(_) => drift.nonlinear(t, state.coeffs())?,
            None => drift.apply(t, state.coeffs())?,
        };
        check_len(space.len(), a.len())?;
        let mut x: Vec<f64> = state.coeffs().iter().zip(&a).map(|(u, a)| u + self.cfg.dt * a).collect();
        self.model.noise().apply_into(state.coeffs(), dw, &mut x);
        if let Some(e) = &self.propagator {
            for (x, e) in x.iter_mut().zip(e) {
                *x *= e;
            }
        }
        Ok(SpectralField::from_vec(x))
    }

    pub fn step(&self, t: f64, state: &SpectralField, dw: &[f64]) -> Result<Step> {
        let space = self.model.space();
        let x = self.free_step(t, state, dw)?;
        let (next, dl) = match self.cfg.method {
            Method::Explicit => {
                let (gap, _) = space.penalty_gap(state)?;
                let dl = gap.scaled(-self.cfg.n * self.cfg.dt);
                (x.add(&dl), dl)
            }
            Method::Splitting => {
                let r = space.norm_h_raw(x.coeffs());
                if r > 1.0 {
                    let next = x.scaled((1.0 + (r - 1.0) * self.decay) / r);
                    let dl = next.sub(&x);
                    (next, dl)
                } else {
                    (x.clone(), space.zeros())
                }
            }
        };
        if !next.is_finite() {
            return Err(Error::BlowUp {
                step: (t / self.cfg.dt).round() as usize,
                t,
                norm: space.norm_h_raw(state.coeffs()),
            });
        }
        let free = x.sub(state);
        Ok(Step { state: next, dl, free })
    }

    /// Runs the whole grid for one path index.
    pub fn simulate(&self, x0: &SpectralField, path_index: u64) -> Result<PathRecord> {
        let space = self.model.space();
        space.check(x0)?;
        let r0 = space.norm_h_raw(x0.coeffs());
        if !(r0 <= 1.0 + BALL_SLACK) {
            return Err(Error::Precondition(format!("initial state has |x0|_H = {r0} > 1")));
        }
        let cfg = &self.cfg;
        let gen = Philox::new(cfg.seed, Domain::Brownian);
        let mut dw = vec![0.0; self.model.noise().mode_count()];
        let mut states = Vec::with_capacity(cfg.steps + 1);
        let mut l_increments = Vec::with_capacity(cfg.steps);
        let mut free_sum = space.zeros();
        let mut acc = Accumulators::default();
        let mut state = x0.clone();
        for j in 0..cfg.steps {
            let t = cfg.time(j);
            let r = space.norm_h_raw(state.coeffs());
            acc.observe(r);
            acc.integrate(r, space.norm_v_pow_alpha_raw(state.coeffs()), cfg.dt);
            fill_increments(&gen, path_index, j as u64, cfg.dt, &mut dw);
            let Step { state: next, dl, free } = self.step(t, &state, &dw).map_err(|e| match e {
                Error::BlowUp { norm, .. } => Error::BlowUp { step: j, t, norm },
                e => e,
            })?;
            free_sum.axpy(1.0, &free);
            states.push(core::mem::replace(&mut state, next));
            l_increments.push(dl);
        }
        acc.observe(space.norm_h_raw(state.coeffs()));
        states.push(state);
        Ok(PathRecord {
            n: cfg.n,
            dt: cfg.dt,
            path_index,
            states,
            l_increments,
            free_sum,
            acc,
        })
    }
}

/// One step from `state` at time `t` with increments `dw`.
pub fn step_penalized(
    state: &SpectralField,
    t: f64,
    cfg: &SchemeConfig,
    model: &ModelSpec,
    dw: &[f64],
) -> Result<(SpectralField, SpectralField)> {
    let s = Stepper::new(model, *cfg)?.step(t, state, dw)?;
    Ok((s.state, s.dl))
}

/// Simulates path `path_index` with the model's noise on the Brownian
/// stream keyed by `cfg.seed`; every `n` sees the same increments.
pub fn simulate_path(
    model: &ModelSpec,
    cfg: &SchemeConfig,
    x0: &SpectralField,
    path_index: u64,
) -> Result<PathRecord> {
    Stepper::new(model, *cfg)?.simulate(x0, path_index)
}
