//! Real-coded GA: tournament selection, uniform crossover, Gaussian
//! mutation and a single elite.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{argmin, evaluate_all, seeded_rng, Bounds, Objective, OptimResult, OptimizerConfig};

fn tournament(fit: &[f64], k: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..k {
        let c = rng.random_range(0..fit.len());
        if fit[c] < fit[best] {
            best = c;
        }
    }
    best
}

pub fn ga_run<O: Objective + ?Sized>(cfg: &OptimizerConfig, bounds: &Bounds, f: &O) -> OptimResult {
    let mut rng = seeded_rng(cfg.seed);
    let s = cfg.swarm_size;
    let dim = bounds.dim();
    let mut pop: Vec<Vec<f64>> = (0..s).map(|_| bounds.sample(&mut rng)).collect();
    let mut fit = evaluate_all(f, &pop);
    let mut evaluations = s;
    let mut bi = argmin(&fit);
    let mut best = (pop[bi].clone(), fit[bi]);
    let mut history = vec![best.1];
    let sigmas: Vec<f64> = (0..dim).map(|d| cfg.mutation_frac * bounds.range(d)).collect();

    for t in 0..cfg.iterations {
        let mut children = Vec::with_capacity(s.saturating_sub(1));
        while children.len() + 1 < s {
            let a = tournament(&fit, cfg.tournament_size, &mut rng);
            let b = tournament(&fit, cfg.tournament_size, &mut rng);
            let mut child = pop[a].clone();
            if rng.random::<f64>() < cfg.p_c {
                for d in 0..dim {
                    if rng.random::<bool>() {
                        child[d] = pop[b][d];
                    }
                }
            }
            for d in 0..dim {
                if rng.random::<f64>() < cfg.p_m && sigmas[d] > 0.0 {
                    let noise = Normal::new(0.0, sigmas[d]).expect("positive sigma").sample(&mut rng);
                    child[d] = bounds.clamp_component(d, child[d] + noise);
                }
            }
            children.push(child);
        }
        let child_fit = evaluate_all(f, &children);
        evaluations += children.len();
        let elite = argmin(&fit);
        let mut next = vec![pop[elite].clone()];
        let mut next_fit = vec![fit[elite]];
        next.extend(children);
        next_fit.extend(child_fit);
        pop = next;
        fit = next_fit;
        bi = argmin(&fit);
        if fit[bi] < best.1 {
            best = (pop[bi].clone(), fit[bi]);
        }
        history.push(best.1);
        if cfg.verbose {
            eprintln!("ga t={} best={:.6e}", t + 1, best.1);
        }
    }
    OptimResult {
        best_position: best.0,
        best_fitness: best.1,
        history,
        evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::Method;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn elitism_keeps_history_monotone() {
        let b = Bounds::uniform(4, -5.0, 5.0);
        let cfg = OptimizerConfig::defaults(Method::Ga).with_seed(4);
        let r = ga_run(&cfg, &b, &sphere);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.best_fitness < 0.5, "{}", r.best_fitness);
        assert_eq!(r, ga_run(&cfg, &b, &sphere));
    }

    #[test]
    fn zero_iterations_is_best_of_initial() {
        let b = Bounds::uniform(2, -5.0, 5.0);
        let mut cfg = OptimizerConfig::defaults(Method::Ga);
        cfg.iterations = 0;
        let r = ga_run(&cfg, &b, &sphere);
        let mut rng = seeded_rng(cfg.seed);
        let best = (0..cfg.swarm_size)
            .map(|_| sphere(&b.sample(&mut rng)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_fitness, best);
    }
}
