//! Multi-objective QPSO with domination rewards, stochastic repair and a
//! Pareto archive.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::qpso::qpso_move;
use super::repair::repair_or_resample;
use super::sa_init::sa_informed_init;
use super::{argmin, seeded_rng, Method, OptimError, OptimizerConfig};
use crate::mo::{
    aggregate_fitness, domination_rewards, dwa_weights, penalty_reward_factor_from, CandidatePosition, ObjectiveProblem,
    ObjectiveVector, ParetoArchive,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub t: usize,
    pub gbest_fitness: f64,
    pub archive_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmoQpsoOutcome {
    pub archive: ParetoArchive,
    pub gbest_position: Vec<f64>,
    pub gbest_fitness: f64,
    pub gbest_objectives: ObjectiveVector,
    pub history: Vec<IterationLog>,
    pub evaluations: usize,
    pub repairs: usize,
}

fn evaluate_swarm<P: ObjectiveProblem>(problem: &P, positions: &[Vec<f64>]) -> Vec<ObjectiveVector> {
    positions.par_iter().map(|x| problem.evaluate(x)).collect()
}

fn archive_feasible(archive: &mut ParetoArchive, positions: &[Vec<f64>], objs: &[ObjectiveVector], n_states: usize) {
    for (x, o) in positions.iter().zip(objs) {
        if o.feasible && o.is_finite() {
            // the benchmark is fixed, so mixed tails cannot occur
            let _ = archive.insert(CandidatePosition::new(x.clone(), n_states), *o);
        }
    }
}

/// Domination reward of `o` against every swarm member except `skip`.
fn reward_against(o: &ObjectiveVector, swarm: &[ObjectiveVector], skip: usize) -> i64 {
    swarm
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .map(|(_, x)| if o.dominates(x) { 1 } else if x.dominates(o) { -1 } else { 0 })
        .sum()
}

/// Swarm fitness at iteration `t`: DWA weights times the penalty-reward
/// factor built from each particle's domination reward.
fn swarm_fitness(cfg: &OptimizerConfig, objs: &[ObjectiveVector], t: usize) -> Vec<f64> {
    let (w1, w2) = dwa_weights(t, cfg.dwa_frequency);
    let rewards = domination_rewards(objs);
    objs.iter()
        .zip(&rewards)
        .map(|(o, &r)| {
            let f_pr = penalty_reward_factor_from(r, objs.len(), o.feasible, o.repair_prob, &cfg.penalty);
            aggregate_fitness(o, w1, w2, f_pr, cfg.rise_sign)
        })
        .collect()
}

pub fn rmo_qpso_run<P: ObjectiveProblem>(cfg: &OptimizerConfig, problem: &P) -> Result<RmoQpsoOutcome, OptimError> {
    if cfg.method != Method::RmoQpso {
        return Err(OptimError::UnknownMethod(format!("{} is not rmo-qpso", cfg.method)));
    }
    cfg.validate()?;
    let dim = problem.dimension();
    let n = problem.n_states();
    let s = cfg.swarm_size;
    let bounds = cfg.bounds(dim);

    let energy = |x: &[f64], w1: f64, w2: f64| {
        let o = problem.evaluate(x);
        let f_pr = penalty_reward_factor_from(0, s, o.feasible, o.repair_prob, &cfg.penalty);
        aggregate_fitness(&o, w1, w2, f_pr, cfg.rise_sign)
    };
    let init = sa_informed_init(&cfg.sa, s, &bounds, &energy, cfg.seed);
    let mut evaluations = s * (1 + cfg.sa.t_ini);

    let mut x: Vec<Vec<f64>> = init.into_iter().map(|p| p.position).collect();
    let mut objs = evaluate_swarm(problem, &x);
    evaluations += s;
    let mut archive = ParetoArchive::new(cfg.archive_capacity);

    let mut rng = seeded_rng(cfg.seed);
    let mut fit = swarm_fitness(cfg, &objs, 0);
    let mut pbest = x.clone();
    let mut pbest_fit = fit.clone();
    let mut pbest_obj = objs.clone();
    let gi = argmin(&pbest_fit);
    let mut gbest = pbest[gi].clone();
    let mut gbest_fit = pbest_fit[gi];
    let mut gbest_obj = objs[gi];
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut repairs = 0;

    for t in 1..=cfg.iterations {
        // stochastic repair of infeasible particles
        let candidates: Vec<CandidatePosition> = x.iter().map(|v| CandidatePosition::new(v.clone(), n)).collect();
        for i in 0..s {
            if objs[i].feasible {
                continue;
            }
            let p_r = candidates[i].repair_probability();
            if rng.random::<f64>() < p_r {
                let fixed = repair_or_resample(&candidates[i], &candidates, &fit, cfg.x_max, &mut rng);
                x[i] = fixed.values;
                objs[i] = problem.evaluate(&x[i]);
                evaluations += 1;
                repairs += 1;
            }
        }

        if cfg.archive_all {
            archive_feasible(&mut archive, &x, &objs, n);
        }
        fit = swarm_fitness(cfg, &objs, t);

        let g = cfg.qpso.g_at(t - 1, cfg.iterations);
        if cfg.rescore_pbest {
            let (w1, w2) = dwa_weights(t, cfg.dwa_frequency);
            for i in 0..s {
                let o = &pbest_obj[i];
                let r = reward_against(o, &objs, i);
                let f_pr = penalty_reward_factor_from(r, s, o.feasible, o.repair_prob, &cfg.penalty);
                pbest_fit[i] = aggregate_fitness(o, w1, w2, f_pr, cfg.rise_sign);
            }
            gbest_fit = f64::INFINITY;
        }
        for i in 0..s {
            if fit[i] < pbest_fit[i] {
                pbest[i].clone_from(&x[i]);
                pbest_fit[i] = fit[i];
                pbest_obj[i] = objs[i];
            }
            if pbest_fit[i] < gbest_fit {
                gbest.clone_from(&pbest[i]);
                gbest_fit = pbest_fit[i];
                gbest_obj = pbest_obj[i];
            }
        }
        for i in 0..s {
            qpso_move(&mut x[i], &pbest[i], &gbest, g, &bounds, &mut rng);
        }
        objs = evaluate_swarm(problem, &x);
        evaluations += s;
        history.push(IterationLog {
            t,
            gbest_fitness: gbest_fit,
            archive_size: archive.len(),
        });
        if cfg.verbose {
            eprintln!("rmo-qpso t={t} gbest={gbest_fit:.6e} archive={}", archive.len());
        }
    }
    archive_feasible(&mut archive, &x, &objs, n);

    Ok(RmoQpsoOutcome {
        archive,
        gbest_position: gbest,
        gbest_fitness: gbest_fit,
        gbest_objectives: gbest_obj,
        history,
        evaluations,
        repairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::TailKind;
    use crate::optim::sa_init::SaInitParams;

    /// Cheap two-objective problem with a known trade-off.
    struct Toy;

    impl ObjectiveProblem for Toy {
        fn dimension(&self) -> usize {
            3
        }
        fn n_states(&self) -> usize {
            2
        }
        fn tail_kind(&self) -> TailKind {
            TailKind::Ess
        }
        fn evaluate(&self, v: &[f64]) -> ObjectiveVector {
            let pos = CandidatePosition::new(v.to_vec(), 2);
            let a = v[0] / 1000.0;
            let b = v[1] / 1000.0;
            let mut o = ObjectiveVector::new(1.0 + a * a + v[2] / 1000.0, (1.0 - a).powi(2), b, 0.5 * b * b, 0.0, TailKind::Ess);
            o.feasible = pos.is_feasible();
            o.repair_prob = pos.repair_probability();
            o
        }
    }

    fn cfg(seed: u64, iterations: usize) -> OptimizerConfig {
        let mut c = OptimizerConfig::defaults(Method::RmoQpso).with_seed(seed);
        c.iterations = iterations;
        c
    }

    #[test]
    fn archive_is_mutually_non_dominated() {
        let out = rmo_qpso_run(&cfg(1, 30), &Toy).unwrap();
        let e = out.archive.entries();
        assert!(!e.is_empty());
        for a in e {
            assert!(a.position.is_feasible());
            for b in e {
                assert!(!a.objectives.dominates(&b.objectives));
            }
        }
    }

    #[test]
    fn zero_iterations_archives_initial_front() {
        let c = cfg(4, 0);
        let out = rmo_qpso_run(&c, &Toy).unwrap();
        let energy = |x: &[f64], w1: f64, w2: f64| {
            let o = Toy.evaluate(x);
            let f_pr = penalty_reward_factor_from(0, c.swarm_size, o.feasible, o.repair_prob, &c.penalty);
            aggregate_fitness(&o, w1, w2, f_pr, c.rise_sign)
        };
        let init = sa_informed_init(&c.sa, c.swarm_size, &c.bounds(3), &energy, c.seed);
        let objs: Vec<ObjectiveVector> = init.iter().map(|p| Toy.evaluate(&p.position)).collect();
        let front: Vec<&ObjectiveVector> = objs
            .iter()
            .filter(|o| o.feasible && !objs.iter().any(|p| p.dominates(o)))
            .collect();
        assert_eq!(out.archive.len(), front.len());
        assert!(out.history.is_empty());
    }

    #[test]
    fn deterministic_and_logged() {
        let a = rmo_qpso_run(&cfg(9, 10), &Toy).unwrap();
        let b = rmo_qpso_run(&cfg(9, 10), &Toy).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 10);
        assert!(a.history.windows(2).all(|w| w[1].gbest_fitness <= w[0].gbest_fitness));
    }

    #[test]
    fn final_swarm_only_archive_is_a_subset_front() {
        let mut c = cfg(6, 15);
        c.archive_all = false;
        let narrow = rmo_qpso_run(&c, &Toy).unwrap();
        let wide = rmo_qpso_run(&cfg(6, 15), &Toy).unwrap();
        assert_eq!(narrow.gbest_position, wide.gbest_position);
        assert!(!narrow.archive.is_empty());
        assert!(narrow.archive.len() <= c.swarm_size);
    }

    #[test]
    fn rejects_other_methods() {
        let c = OptimizerConfig::defaults(Method::Pso);
        assert!(matches!(rmo_qpso_run(&c, &Toy), Err(OptimError::UnknownMethod(_))));
    }

    #[test]
    fn repairs_happen_when_swarm_hits_r_floor() {
        // R pinned at zero by the box lower bound makes particles infeasible
        let mut c = cfg(2, 20);
        c.sa = SaInitParams {
            t_ini: 0,
            ..c.sa
        };
        let out = rmo_qpso_run(&c, &Toy).unwrap();
        assert!(out.archive.entries().iter().all(|e| e.position.is_feasible()));
    }
}
