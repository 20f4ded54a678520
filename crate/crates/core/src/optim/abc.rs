//! Artificial bee colony with equal employed and onlooker counts and one
//! scout per cycle.

use rand::Rng;

use super::{argmin, evaluate_all, seeded_rng, Bounds, Objective, OptimResult, OptimizerConfig};

/// Roulette weight of a food source; handles negative fitness.
fn quality(f: f64) -> f64 {
    if !f.is_finite() {
        0.0
    } else if f >= 0.0 {
        1.0 / (1.0 + f)
    } else {
        1.0 + f.abs()
    }
}

fn neighbor(foods: &[Vec<f64>], i: usize, bounds: &Bounds, rng: &mut impl Rng) -> Vec<f64> {
    let n = foods.len();
    let mut k = rng.random_range(0..n - 1);
    if k >= i {
        k += 1;
    }
    let d = rng.random_range(0..bounds.dim());
    let phi: f64 = rng.random_range(-1.0..=1.0);
    let mut v = foods[i].clone();
    v[d] = bounds.clamp_component(d, foods[i][d] + phi * (foods[i][d] - foods[k][d]));
    v
}

pub fn abc_run<O: Objective + ?Sized>(cfg: &OptimizerConfig, bounds: &Bounds, f: &O) -> OptimResult {
    let mut rng = seeded_rng(cfg.seed);
    let n_food = (cfg.swarm_size / 2).max(2);
    let limit = (cfg.swarm_size * bounds.dim() / 2).max(1);
    let mut foods: Vec<Vec<f64>> = (0..n_food).map(|_| bounds.sample(&mut rng)).collect();
    let mut fit = evaluate_all(f, &foods);
    let mut trials = vec![0usize; n_food];
    let mut evaluations = n_food;
    let bi = argmin(&fit);
    let mut best = (foods[bi].clone(), fit[bi]);
    let mut history = vec![best.1];

    let greedy = |foods: &mut Vec<Vec<f64>>, fit: &mut Vec<f64>, trials: &mut Vec<usize>, i: usize, v: Vec<f64>, fv: f64| {
        if fv < fit[i] {
            foods[i] = v;
            fit[i] = fv;
            trials[i] = 0;
        } else {
            trials[i] += 1;
        }
    };

    for t in 0..cfg.iterations {
        // employed bees
        let cand: Vec<Vec<f64>> = (0..n_food).map(|i| neighbor(&foods, i, bounds, &mut rng)).collect();
        let cand_fit = evaluate_all(f, &cand);
        evaluations += n_food;
        for (i, (v, fv)) in cand.into_iter().zip(cand_fit).enumerate() {
            greedy(&mut foods, &mut fit, &mut trials, i, v, fv);
        }

        // onlooker bees
        let weights: Vec<f64> = fit.iter().map(|&v| quality(v)).collect();
        let total: f64 = weights.iter().sum();
        let picks: Vec<usize> = (0..n_food)
            .map(|_| {
                if total <= 0.0 {
                    return rng.random_range(0..n_food);
                }
                let mut r = rng.random::<f64>() * total;
                for (i, w) in weights.iter().enumerate() {
                    if r < *w {
                        return i;
                    }
                    r -= w;
                }
                n_food - 1
            })
            .collect();
        let cand: Vec<Vec<f64>> = picks.iter().map(|&i| neighbor(&foods, i, bounds, &mut rng)).collect();
        let cand_fit = evaluate_all(f, &cand);
        evaluations += n_food;
        for ((i, v), fv) in picks.into_iter().zip(cand).zip(cand_fit) {
            greedy(&mut foods, &mut fit, &mut trials, i, v, fv);
        }

        let bi = argmin(&fit);
        if fit[bi] < best.1 {
            best = (foods[bi].clone(), fit[bi]);
        }

        // one scout
        let worn = (0..n_food).max_by_key(|&i| (trials[i], std::cmp::Reverse(i))).unwrap();
        if trials[worn] > limit {
            foods[worn] = bounds.sample(&mut rng);
            fit[worn] = super::sanitize(f.evaluate(&foods[worn]));
            trials[worn] = 0;
            evaluations += 1;
            if fit[worn] < best.1 {
                best = (foods[worn].clone(), fit[worn]);
            }
        }
        history.push(best.1);
        if cfg.verbose {
            eprintln!("abc t={} best={:.6e}", t + 1, best.1);
        }
    }
    OptimResult {
        best_position: best.0,
        best_fitness: best.1,
        history,
        evaluations,
    }
}
