//! Swarm and baseline optimizers over a box-bounded search space.

pub mod abc;
pub mod baseline;
pub mod de;
pub mod ga;
pub mod lm;
pub mod pso;
pub mod qpso;
pub mod repair;
pub mod rmo_qpso;
pub mod sa_init;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mo::{PenaltyConfig, PenaltyMode, DEFAULT_ARCHIVE_CAPACITY, DEFAULT_DWA_FREQUENCY, DEFAULT_PHI};
pub use qpso::{GSchedule, QpsoParams, LN_SQRT2};
pub use sa_init::SaInitParams;

pub const DEFAULT_X_MAX: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fewer than two feasible donors available for repair")]
    NoFeasibleDonors,
    #[error("attractor coefficients sum to zero")]
    DegenerateDraw,
}

pub type Rng64 = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + 1);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn range(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn clamp_component(&self, d: usize, v: f64) -> f64 {
        if v.is_nan() {
            return self.lower[d];
        }
        v.clamp(self.lower[d], self.upper[d])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = self.clamp_component(d, *v);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, v)| *v >= self.lower[d] && *v <= self.upper[d])
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim())
            .map(|d| self.lower[d] + rng.random::<f64>() * self.range(d))
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|d| 0.5 * (self.lower[d] + self.upper[d])).collect()
    }
}

/// Scalar objective to minimize.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for F {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Evaluates every position; results keep the input order.
pub fn evaluate_all<O: Objective + ?Sized>(f: &O, positions: &[Vec<f64>]) -> Vec<f64> {
    positions.par_iter().map(|x| sanitize(f.evaluate(x))).collect()
}

/// NaN compares as the worst possible value.
pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Best point found by a scalar optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after initialization and after every iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Method {
    #[serde(rename = "pso")]
    Pso,
    #[serde(rename = "cpso")]
    Cpso,
    #[serde(rename = "aiwpso")]
    Aiwpso,
    #[serde(rename = "qpso")]
    Qpso,
    #[serde(rename = "rmo-qpso")]
    RmoQpso,
    #[serde(rename = "ga")]
    Ga,
    #[serde(rename = "de")]
    De,
    #[serde(rename = "abc")]
    Abc,
    #[serde(rename = "lm")]
    Lm,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Ga,
        Method::De,
        Method::Abc,
        Method::Pso,
        Method::Cpso,
        Method::Aiwpso,
        Method::Lm,
        Method::Qpso,
        Method::RmoQpso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pso => "pso",
            Method::Cpso => "cpso",
            Method::Aiwpso => "aiwpso",
            Method::Qpso => "qpso",
            Method::RmoQpso => "rmo-qpso",
            Method::Ga => "ga",
            Method::De => "de",
            Method::Abc => "abc",
            Method::Lm => "lm",
        }
    }

    /// LM starts from the box center and draws no random numbers.
    pub fn is_deterministic(self) -> bool {
        self == Method::Lm
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key || (key == "rmoqpso" && *m == Method::RmoQpso))
            .ok_or_else(|| OptimError::UnknownMethod(s.to_string()))
    }
}

/// Everything needed to reproduce one optimizer run. Fields that a method
/// does not use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub swarm_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub x_max: f64,
    pub c_p: f64,
    pub c_g: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// `v_max` as a fraction of the box width.
    pub v_max_frac: f64,
    /// GA crossover probability.
    pub p_c: f64,
    /// GA per-gene mutation probability.
    pub p_m: f64,
    /// GA mutation scale as a fraction of the box width.
    pub mutation_frac: f64,
    pub tournament_size: usize,
    /// DE differential weight.
    pub de_f: f64,
    /// DE crossover rate.
    pub de_cr: f64,
    pub lm_lambda: f64,
    /// LM finite-difference step as a fraction of `x_max`.
    pub lm_fd_frac: f64,
    pub qpso: QpsoParams,
    pub sa: SaInitParams,
    pub penalty: PenaltyConfig,
    pub dwa_frequency: usize,
    pub rise_sign: f64,
    pub archive_capacity: usize,
    /// Re-scores personal bests under each iteration's weights and rewards.
    pub rescore_pbest: bool,
    /// Archive every feasible candidate seen, not just the final swarm.
    pub archive_all: bool,
    #[serde(default)]
    pub verbose: bool,
}

impl OptimizerConfig {
    /// Tuned defaults for each method.
    pub fn defaults(method: Method) -> Self {
        let mut cfg = Self {
            method,
            swarm_size: 20,
            iterations: 75,
            seed: 0,
            x_max: DEFAULT_X_MAX,
            c_p: 0.7,
            c_g: 1.5,
            w_min: 0.4,
            w_max: 0.9,
            v_max_frac: 0.2,
            p_c: 0.9,
            p_m: 0.1,
            mutation_frac: 0.05,
            tournament_size: 5,
            de_f: 0.8,
            de_cr: 0.15,
            lm_lambda: 10.0,
            lm_fd_frac: 1e-4,
            qpso: QpsoParams::default(),
            sa: SaInitParams::default(),
            penalty: PenaltyConfig {
                mode: PenaltyMode::Corrected,
                phi: DEFAULT_PHI,
            },
            dwa_frequency: DEFAULT_DWA_FREQUENCY,
            rise_sign: 1.0,
            archive_capacity: DEFAULT_ARCHIVE_CAPACITY,
            rescore_pbest: false,
            archive_all: true,
            verbose: false,
        };
        let (s, t) = match method {
            Method::Lm => (1, 150),
            Method::Ga => (70, 150),
            Method::De => (50, 150),
            Method::Abc => (30, 175),
            Method::Pso => (40, 50),
            Method::Cpso => (20, 175),
            Method::Aiwpso => (40, 70),
            Method::Qpso | Method::RmoQpso => (20, 75),
        };
        cfg.swarm_size = s;
        cfg.iterations = t;
        if method == Method::Aiwpso {
            cfg.w_min = 0.05;
            cfg.w_max = 0.95;
        }
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Box `[0, x_max]^dim`.
    pub fn bounds(&self, dim: usize) -> Bounds {
        Bounds::uniform(dim, 0.0, self.x_max)
    }

    /// Sets a parameter by name, as used by sweep plans and the CLI.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), OptimError> {
        let as_count = |v: f64| -> Result<usize, OptimError> {
            if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(OptimError::InvalidParameter(format!("{name} must be a non-negative integer, got {v}")))
            }
        };
        match name {
            "swarm" | "swarm_size" | "S" => self.swarm_size = as_count(value)?,
            "iterations" | "T" => self.iterations = as_count(value)?,
            "seed" => self.seed = as_count(value)? as u64,
            "x_max" => self.x_max = value,
            "c_p" => self.c_p = value,
            "c_g" => self.c_g = value,
            "w_min" => self.w_min = value,
            "w_max" => self.w_max = value,
            "v_max_frac" => self.v_max_frac = value,
            "p_c" => self.p_c = value,
            "p_m" => self.p_m = value,
            "mutation_frac" => self.mutation_frac = value,
            "tournament_size" => self.tournament_size = as_count(value)?,
            "de_f" | "F" => self.de_f = value,
            "de_cr" | "CR" => self.de_cr = value,
            "lambda" | "lm_lambda" => self.lm_lambda = value,
            "lm_fd_frac" => self.lm_fd_frac = value,
            "g" => self.qpso.g = value,
            "g_coef" => self.qpso.g = value * LN_SQRT2,
            "t_ini" => self.sa.t_ini = as_count(value)?,
            "alpha" => self.sa.alpha = value,
            "sigma" => self.sa.sigma = value,
            "p_succ" => self.sa.p_succ = value,
            "phi" => self.penalty.phi = value,
            "dwa_f" | "dwa_frequency" => self.dwa_frequency = as_count(value)?,
            "rise_sign" => self.rise_sign = value,
            "archive_capacity" => self.archive_capacity = as_count(value)?,
            _ => return Err(OptimError::UnknownParameter(name.to_string())),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |msg: String| Err(OptimError::InvalidParameter(msg));
        if self.swarm_size == 0 && self.method != Method::Lm {
            return bad("swarm size must be positive".into());
        }
        if !(self.x_max.is_finite() && self.x_max > 0.0) {
            return bad(format!("x_max must be positive, got {}", self.x_max));
        }
        for (name, v) in [("p_c", self.p_c), ("p_m", self.p_m), ("de_cr", self.de_cr)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.w_min.is_finite() && self.w_max.is_finite() && self.v_max_frac > 0.0) {
            return bad("inertia bounds must be finite and v_max positive".into());
        }
        if !(self.lm_lambda >= 0.0 && self.lm_fd_frac > 0.0) {
            return bad("lm lambda must be >= 0 and fd step positive".into());
        }
        if self.rise_sign != 1.0 && self.rise_sign != -1.0 {
            return bad(format!("rise_sign must be +1 or -1, got {}", self.rise_sign));
        }
        if !(self.penalty.phi > 0.0) {
            return bad("phi must be positive".into());
        }
        if matches!(self.method, Method::Ga) && self.tournament_size == 0 {
            return bad("tournament size must be positive".into());
        }
        if matches!(self.method, Method::De) && self.swarm_size < 4 {
            return bad("DE needs at least 4 individuals".into());
        }
        if matches!(self.method, Method::Abc) && self.swarm_size < 4 {
            return bad("ABC needs at least 4 bees".into());
        }
        self.qpso.validate()?;
        self.sa.validate()
    }
}
