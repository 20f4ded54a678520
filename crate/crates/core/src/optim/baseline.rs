//! Runs any method on a design problem and reports one representative
//! solution.

use serde::{Deserialize, Serialize};

use super::abc::abc_run;
use super::de::de_run;
use super::ga::ga_run;
use super::lm::{lm_run, LmParams};
use super::pso::pso_run;
use super::qpso::qpso_run;
use super::rmo_qpso::rmo_qpso_run;
use super::{Method, OptimError, OptimResult, OptimizerConfig};
use crate::mo::{scalarized_fitness, CandidatePosition, ObjectiveProblem, ObjectiveVector, ParetoArchive};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub seed: u64,
    pub position: CandidatePosition,
    pub objectives: ObjectiveVector,
    /// Fixed-weight scalarized fitness of `objectives`.
    pub fitness: f64,
    pub archive: Option<ParetoArchive>,
    pub evaluations: usize,
}

/// Position actually scored: R entries are lifted to the definiteness
/// floor, Q entries to zero.
pub fn feasible_projection(x: &[f64], n_states: usize) -> Vec<f64> {
    CandidatePosition::new(x.to_vec(), n_states).projected_feasible().values
}

/// Single-objective baseline on the fixed-weight scalarization.
pub fn baseline_run<P: ObjectiveProblem>(cfg: &OptimizerConfig, problem: &P) -> Result<MethodOutcome, OptimError> {
    cfg.validate()?;
    let n = problem.n_states();
    let dim = problem.dimension();
    let bounds = cfg.bounds(dim);
    let scalar = |x: &[f64]| scalarized_fitness(&problem.evaluate(&feasible_projection(x, n)), cfg.rise_sign);
    let result: OptimResult = match cfg.method {
        Method::Pso | Method::Cpso | Method::Aiwpso => pso_run(cfg, &bounds, &scalar),
        Method::Qpso => qpso_run(cfg, &bounds, &scalar),
        Method::Ga => ga_run(cfg, &bounds, &scalar),
        Method::De => de_run(cfg, &bounds, &scalar),
        Method::Abc => abc_run(cfg, &bounds, &scalar),
        Method::Lm => {
            let residual = |x: &[f64]| {
                let o = problem.evaluate(&feasible_projection(x, n));
                vec![o.j.max(f64::MIN_POSITIVE).log10() + o.tail, o.os, o.ts, o.tr]
            };
            let params = LmParams {
                lambda: cfg.lm_lambda,
                iterations: cfg.iterations,
                fd_step: cfg.lm_fd_frac * cfg.x_max,
            };
            lm_run(&residual, &scalar, &bounds.center(), &bounds, &params, cfg.verbose)
        }
        Method::RmoQpso => {
            return Err(OptimError::UnknownMethod(
                "rmo-qpso is not a single-objective baseline".to_string(),
            ))
        }
    };
    let position = CandidatePosition::new(feasible_projection(&result.best_position, n), n);
    let objectives = problem.evaluate(&position.values);
    Ok(MethodOutcome {
        method: cfg.method,
        seed: cfg.seed,
        fitness: scalarized_fitness(&objectives, cfg.rise_sign),
        position,
        objectives,
        archive: None,
        evaluations: result.evaluations,
    })
}

/// Any method, including the Pareto one; for the latter the reported
/// solution is the archive member with the lowest scalarized fitness.
pub fn run_method<P: ObjectiveProblem>(cfg: &OptimizerConfig, problem: &P) -> Result<MethodOutcome, OptimError> {
    if cfg.method != Method::RmoQpso {
        return baseline_run(cfg, problem);
    }
    let out = rmo_qpso_run(cfg, problem)?;
    let n = problem.n_states();
    let (position, objectives) = match out.archive.best_scalarized(cfg.rise_sign) {
        Some(e) => (e.position.clone(), e.objectives),
        None => (CandidatePosition::new(out.gbest_position.clone(), n), out.gbest_objectives),
    };
    Ok(MethodOutcome {
        method: cfg.method,
        seed: cfg.seed,
        fitness: scalarized_fitness(&objectives, cfg.rise_sign),
        position,
        objectives,
        archive: Some(out.archive),
        evaluations: out.evaluations,
    })
}
