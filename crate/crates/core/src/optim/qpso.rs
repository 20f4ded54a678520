//! Quantum-behaved PSO: velocity-free sampling around a random local
//! attractor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, evaluate_all, seeded_rng, Bounds, Objective, OptimError, OptimResult, OptimizerConfig};

/// `ln √2`, the lower limit on the contraction parameter.
pub const LN_SQRT2: f64 = 0.346_573_590_279_972_64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GSchedule {
    #[default]
    Fixed,
    /// `g(t) = g / β(t)` with `β` falling linearly from 1.0 to 0.5, so the
    /// search tightens from `g` to `2g` over the run.
    LinearDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpsoParams {
    pub g: f64,
    pub schedule: GSchedule,
}

impl Default for QpsoParams {
    fn default() -> Self {
        Self {
            g: 1.5 * LN_SQRT2,
            schedule: GSchedule::Fixed,
        }
    }
}

impl QpsoParams {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.g.is_finite() && self.g > LN_SQRT2 {
            Ok(())
        } else {
            Err(OptimError::InvalidParameter(format!(
                "g must exceed ln(sqrt 2) = {LN_SQRT2:.5}, got {}",
                self.g
            )))
        }
    }

    /// Contraction parameter at iteration `t` of `total`.
    pub fn g_at(&self, t: usize, total: usize) -> f64 {
        match self.schedule {
            GSchedule::Fixed => self.g,
            GSchedule::LinearDecay => {
                let frac = if total <= 1 { 0.0 } else { (t as f64) / (total as f64 - 1.0) };
                let beta = 1.0 - 0.5 * frac.clamp(0.0, 1.0);
                self.g / beta
            }
        }
    }
}

/// `(c_p·pbest + c_g·gbest)/(c_p + c_g)` for given coefficients.
pub fn local_attractor_with(pbest: f64, gbest: f64, c_p: f64, c_g: f64) -> Result<f64, OptimError> {
    let s = c_p + c_g;
    if s == 0.0 {
        return Err(OptimError::DegenerateDraw);
    }
    Ok((c_p * pbest + c_g * gbest) / s)
}

/// Attractor with fresh `c_p, c_g ~ U[0,1]` per component; a zero sum is
/// redrawn.
pub fn local_attractor(pbest: &[f64], gbest: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    pbest
        .iter()
        .zip(gbest)
        .map(|(&pb, &gb)| loop {
            let c_p: f64 = rng.random();
            let c_g: f64 = rng.random();
            if let Ok(p) = local_attractor_with(pb, gb, c_p, c_g) {
                // rounding can leave p a hair outside [pb, gb]
                break p.clamp(pb.min(gb), pb.max(gb));
            }
        })
        .collect()
}

/// `p ± (1/g)|x − p| ln(1/u)` for a given `u ∈ (0,1]` and sign.
pub fn qpso_sample_with(x: f64, p: f64, g: f64, u: f64, positive: bool) -> f64 {
    let step = (x - p).abs() / g * (1.0 / u).ln();
    if positive {
        p + step
    } else {
        p - step
    }
}

/// One unclamped sample with `u ~ U(0,1]` and an equiprobable sign.
pub fn qpso_sample(x: f64, p: f64, g: f64, rng: &mut impl Rng) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    let positive = rng.random::<bool>();
    qpso_sample_with(x, p, g, u, positive)
}

/// Moves one particle in place and clamps it to the box.
pub fn qpso_move(x: &mut [f64], pbest: &[f64], gbest: &[f64], g: f64, bounds: &Bounds, rng: &mut impl Rng) {
    let p = local_attractor(pbest, gbest, rng);
    for d in 0..x.len() {
        x[d] = bounds.clamp_component(d, qpso_sample(x[d], p[d], g, rng));
    }
}

/// Plain QPSO on a scalar objective.
pub fn qpso_run<O: Objective + ?Sized>(cfg: &OptimizerConfig, bounds: &Bounds, f: &O) -> OptimResult {
    let mut rng = seeded_rng(cfg.seed);
    let s = cfg.swarm_size;
    let mut x: Vec<Vec<f64>> = (0..s).map(|_| bounds.sample(&mut rng)).collect();
    let mut fit = evaluate_all(f, &x);
    let mut evaluations = s;
    let mut pbest = x.clone();
    let mut pbest_fit = fit.clone();
    let mut gi = argmin(&pbest_fit);
    let mut gbest = pbest[gi].clone();
    let mut gbest_fit = pbest_fit[gi];
    let mut history = vec![gbest_fit];

    for t in 0..cfg.iterations {
        let g = cfg.qpso.g_at(t, cfg.iterations);
        for i in 0..s {
            qpso_move(&mut x[i], &pbest[i], &gbest, g, bounds, &mut rng);
        }
        fit = evaluate_all(f, &x);
        evaluations += s;
        for i in 0..s {
            if fit[i] < pbest_fit[i] {
                pbest[i].clone_from(&x[i]);
                pbest_fit[i] = fit[i];
            }
        }
        gi = argmin(&pbest_fit);
        if pbest_fit[gi] < gbest_fit {
            gbest.clone_from(&pbest[gi]);
            gbest_fit = pbest_fit[gi];
        }
        history.push(gbest_fit);
        if cfg.verbose {
            eprintln!("qpso t={} gbest={:.6e}", t + 1, gbest_fit);
        }
    }
    OptimResult {
        best_position: gbest,
        best_fitness: gbest_fit,
        history,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{seeded_rng, Method};
    use proptest::prelude::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn attractor_examples() {
        assert_eq!(local_attractor_with(2.0, 4.0, 0.3, 0.3).unwrap(), 3.0);
        assert_eq!(local_attractor_with(2.0, 4.0, 0.3, 0.0).unwrap(), 2.0);
        assert_eq!(local_attractor_with(0.0, 1.0, 0.25, 0.75).unwrap(), 0.75);
        assert_eq!(local_attractor_with(0.0, 1.0, 0.0, 0.0), Err(OptimError::DegenerateDraw));
    }

    #[test]
    fn sample_examples() {
        assert_eq!(qpso_sample_with(3.0, 3.0, 1.0, 0.2, true), 3.0);
        assert_eq!(qpso_sample_with(5.0, 3.0, 1.0, 1.0, false), 3.0);
        let mut rng = seeded_rng(1);
        assert_eq!(qpso_sample(2.0, 2.0, 0.5, &mut rng), 2.0);
    }

    #[test]
    fn sample_mean_distance_matches_expectation() {
        let mut rng = seeded_rng(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| (qpso_sample(1.0, 0.0, 1.0, &mut rng)).abs()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn g_schedule_stays_above_limit() {
        let q = QpsoParams {
            g: 1.5 * LN_SQRT2,
            schedule: GSchedule::LinearDecay,
        };
        assert_eq!(q.g_at(0, 75), q.g);
        assert!((q.g_at(74, 75) - 2.0 * q.g).abs() < 1e-12);
        for t in 0..75 {
            assert!(q.g_at(t, 75) > LN_SQRT2);
        }
        assert!(QpsoParams { g: 0.3, ..q }.validate().is_err());
    }

    #[test]
    fn zero_iterations_returns_best_initial() {
        let mut cfg = OptimizerConfig::defaults(Method::Qpso);
        cfg.iterations = 0;
        let b = Bounds::uniform(3, -5.0, 5.0);
        let r = qpso_run(&cfg, &b, &sphere);
        let mut rng = seeded_rng(cfg.seed);
        let init: Vec<Vec<f64>> = (0..cfg.swarm_size).map(|_| b.sample(&mut rng)).collect();
        let best = init.iter().map(|x| sphere(x)).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_fitness, best);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = OptimizerConfig::defaults(Method::Qpso).with_seed(5);
        let b = Bounds::uniform(4, -5.0, 5.0);
        assert_eq!(qpso_run(&cfg, &b, &sphere), qpso_run(&cfg, &b, &sphere));
    }

    #[test]
    fn sphere_converges_in_most_runs() {
        let b = Bounds::uniform(4, 0.0, 10.0);
        let hits = (0..50)
            .filter(|&seed| {
                let cfg = OptimizerConfig::defaults(Method::Qpso).with_seed(seed);
                qpso_run(&cfg, &b, &sphere).best_fitness < 1e-3
            })
            .count();
        assert!(hits >= 45, "{hits}/50");
    }

    proptest! {
        #[test]
        fn attractor_lies_between(pb in -100.0f64..100.0, gb in -100.0f64..100.0, seed in 0u64..1000) {
            let mut rng = seeded_rng(seed);
            let p = local_attractor(&[pb], &[gb], &mut rng)[0];
            prop_assert!(p >= pb.min(gb) && p <= pb.max(gb));
        }

        #[test]
        fn moves_stay_in_box(seed in 0u64..500) {
            let b = Bounds::uniform(3, 0.0, 10.0);
            let mut rng = seeded_rng(seed);
            let mut x = b.sample(&mut rng);
            let pb = b.sample(&mut rng);
            let gb = b.sample(&mut rng);
            qpso_move(&mut x, &pb, &gb, 0.52, &b, &mut rng);
            prop_assert!(b.contains(&x));
        }
    }
}
