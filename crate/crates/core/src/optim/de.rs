//! DE/rand/1/bin.

use rand::Rng;

use super::{argmin, evaluate_all, seeded_rng, Bounds, Objective, OptimResult, OptimizerConfig};

fn distinct(n: usize, exclude: usize, rng: &mut impl Rng) -> [usize; 3] {
    let mut out = [0usize; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != exclude && !out[..k].contains(&c) {
            out[k] = c;
            k += 1;
        }
    }
    out
}

pub fn de_run<O: Objective + ?Sized>(cfg: &OptimizerConfig, bounds: &Bounds, f: &O) -> OptimResult {
    let mut rng = seeded_rng(cfg.seed);
    let s = cfg.swarm_size;
    let dim = bounds.dim();
    let mut pop: Vec<Vec<f64>> = (0..s).map(|_| bounds.sample(&mut rng)).collect();
    let mut fit = evaluate_all(f, &pop);
    let mut evaluations = s;
    let mut history = vec![fit[argmin(&fit)]];

    for t in 0..cfg.iterations {
        let trials: Vec<Vec<f64>> = (0..s)
            .map(|i| {
                let [r1, r2, r3] = distinct(s, i, &mut rng);
                let j_rand = rng.random_range(0..dim);
                (0..dim)
                    .map(|d| {
                        if d == j_rand || rng.random::<f64>() < cfg.de_cr {
                            let v = pop[r1][d] + cfg.de_f * (pop[r2][d] - pop[r3][d]);
                            bounds.clamp_component(d, v)
                        } else {
                            pop[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fit = evaluate_all(f, &trials);
        evaluations += s;
        for (i, (x, fx)) in trials.into_iter().zip(trial_fit).enumerate() {
            if fx <= fit[i] {
                pop[i] = x;
                fit[i] = fx;
            }
        }
        history.push(fit[argmin(&fit)]);
        if cfg.verbose {
            eprintln!("de t={} best={:.6e}", t + 1, history.last().unwrap());
        }
    }
    let bi = argmin(&fit);
    OptimResult {
        best_position: pop[bi].clone(),
        best_fitness: fit[bi],
        history,
        evaluations,
    }
}
