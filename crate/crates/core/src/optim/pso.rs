//! Velocity-based PSO and two variants: chaotic coefficients (CPSO) and
//! success-adaptive inertia (AIWPSO).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, evaluate_all, seeded_rng, Bounds, Method, Objective, OptimResult, OptimizerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub pbest: Vec<Vec<f64>>,
    pub pbest_fitness: Vec<f64>,
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    pub t: usize,
    /// Fraction of particles whose pbest improved in the last step.
    pub success_rate: f64,
}

impl SwarmState {
    /// Evaluates `positions` and seeds the personal and global bests;
    /// velocities start at zero.
    pub fn initialize<O: Objective + ?Sized>(positions: Vec<Vec<f64>>, f: &O) -> Self {
        let fitness = evaluate_all(f, &positions);
        let gi = argmin(&fitness);
        Self {
            velocities: positions.iter().map(|x| vec![0.0; x.len()]).collect(),
            pbest: positions.clone(),
            pbest_fitness: fitness.clone(),
            gbest: positions[gi].clone(),
            gbest_fitness: fitness[gi],
            positions,
            fitness,
            t: 0,
            success_rate: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Logistic map `z ← 4z(1 − z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticMap {
    pub z: f64,
}

impl LogisticMap {
    /// Starting point drawn away from the map's fixed and periodic points.
    pub fn seeded(rng: &mut impl Rng) -> Self {
        loop {
            let z: f64 = rng.random_range(0.01..0.99);
            if [0.25, 0.5, 0.75].iter().all(|p| (z - p).abs() > 1e-3) {
                return Self { z };
            }
        }
    }

    pub fn next_value(&mut self) -> f64 {
        self.z = 4.0 * self.z * (1.0 - self.z);
        // rounding can land on the absorbing points; nudge off them
        if !(self.z > 1e-12 && self.z < 1.0 - 1e-12) || (self.z - 0.75).abs() < 1e-12 {
            self.z = 0.123_456_789;
        }
        self.z
    }
}

/// Where the `r_p, r_g` draws come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSource {
    Uniform,
    Chaotic { rp: LogisticMap, rg: LogisticMap },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoStepParams {
    pub w: f64,
    pub c_p: f64,
    pub c_g: f64,
    /// Per-component velocity limit; velocities lie in `[-v_max, v_max]`.
    pub v_max: Vec<f64>,
}

/// One PSO iteration: velocity and position update, clamping, evaluation,
/// then pbest/gbest.
pub fn pso_step<O: Objective + ?Sized>(
    state: &mut SwarmState,
    params: &PsoStepParams,
    bounds: &Bounds,
    f: &O,
    coeffs: &mut CoefficientSource,
    rng: &mut impl Rng,
) {
    for i in 0..state.len() {
        for d in 0..bounds.dim() {
            let (rp, rg) = match coeffs {
                CoefficientSource::Uniform => (rng.random::<f64>(), rng.random::<f64>()),
                CoefficientSource::Chaotic { rp, rg } => (rp.next_value(), rg.next_value()),
            };
            let x = state.positions[i][d];
            let v = params.w * state.velocities[i][d]
                + params.c_p * rp * (state.pbest[i][d] - x)
                + params.c_g * rg * (state.gbest[d] - x);
            let v = v.clamp(-params.v_max[d], params.v_max[d]);
            state.velocities[i][d] = v;
            state.positions[i][d] = bounds.clamp_component(d, x + v);
        }
    }
    state.fitness = evaluate_all(f, &state.positions);
    let mut improved = 0;
    for i in 0..state.len() {
        if state.fitness[i] < state.pbest_fitness[i] {
            state.pbest[i].clone_from(&state.positions[i]);
            state.pbest_fitness[i] = state.fitness[i];
            improved += 1;
        }
    }
    state.success_rate = improved as f64 / state.len().max(1) as f64;
    let gi = argmin(&state.pbest_fitness);
    if state.pbest_fitness[gi] < state.gbest_fitness {
        state.gbest.clone_from(&state.pbest[gi]);
        state.gbest_fitness = state.pbest_fitness[gi];
    }
    state.t += 1;
}

/// Inertia for the next step.
fn inertia(cfg: &OptimizerConfig, state: &SwarmState) -> f64 {
    match cfg.method {
        Method::Aiwpso => cfg.w_min + (cfg.w_max - cfg.w_min) * state.success_rate,
        _ => {
            let frac = if cfg.iterations == 0 {
                0.0
            } else {
                state.t as f64 / cfg.iterations as f64
            };
            cfg.w_max - (cfg.w_max - cfg.w_min) * frac
        }
    }
}

/// Runs PSO, CPSO or AIWPSO according to `cfg.method`.
pub fn pso_run<O: Objective + ?Sized>(cfg: &OptimizerConfig, bounds: &Bounds, f: &O) -> OptimResult {
    let mut rng = seeded_rng(cfg.seed);
    let positions: Vec<Vec<f64>> = (0..cfg.swarm_size).map(|_| bounds.sample(&mut rng)).collect();
    let mut coeffs = if cfg.method == Method::Cpso {
        CoefficientSource::Chaotic {
            rp: LogisticMap::seeded(&mut rng),
            rg: LogisticMap::seeded(&mut rng),
        }
    } else {
        CoefficientSource::Uniform
    };
    let mut state = SwarmState::initialize(positions, f);
    let mut history = vec![state.gbest_fitness];
    let v_max: Vec<f64> = (0..bounds.dim()).map(|d| cfg.v_max_frac * bounds.range(d)).collect();
    for _ in 0..cfg.iterations {
        let params = PsoStepParams {
            w: inertia(cfg, &state),
            c_p: cfg.c_p,
            c_g: cfg.c_g,
            v_max: v_max.clone(),
        };
        pso_step(&mut state, &params, bounds, f, &mut coeffs, &mut rng);
        history.push(state.gbest_fitness);
        if cfg.verbose {
            eprintln!("{} t={} gbest={:.6e}", cfg.method, state.t, state.gbest_fitness);
        }
    }
    OptimResult {
        best_position: state.gbest,
        best_fitness: state.gbest_fitness,
        history,
        evaluations: cfg.swarm_size * (cfg.iterations + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn zero_gains_translate_linearly() {
        let b = Bounds::uniform(2, -100.0, 100.0);
        let mut state = SwarmState::initialize(vec![vec![0.0, 0.0], vec![1.0, 1.0]], &sphere);
        state.velocities = vec![vec![1.0, -0.5], vec![0.25, 0.0]];
        let params = PsoStepParams {
            w: 1.0,
            c_p: 0.0,
            c_g: 0.0,
            v_max: vec![10.0; 2],
        };
        let mut rng = seeded_rng(0);
        for k in 1..=3 {
            pso_step(&mut state, &params, &b, &sphere, &mut CoefficientSource::Uniform, &mut rng);
            assert_eq!(state.positions[0], vec![k as f64, -0.5 * k as f64]);
            assert_eq!(state.velocities[0], vec![1.0, -0.5]);
        }
    }

    #[test]
    fn particle_at_its_bests_stays_put() {
        let b = Bounds::uniform(2, -10.0, 10.0);
        let mut state = SwarmState::initialize(vec![vec![0.0, 0.0]], &sphere);
        let params = PsoStepParams {
            w: 0.7,
            c_p: 1.5,
            c_g: 1.5,
            v_max: vec![1.0; 2],
        };
        let mut rng = seeded_rng(0);
        pso_step(&mut state, &params, &b, &sphere, &mut CoefficientSource::Uniform, &mut rng);
        assert_eq!(state.positions[0], vec![0.0, 0.0]);
    }

    #[test]
    fn sphere_converges_in_most_runs() {
        let b = Bounds::uniform(4, 0.0, 10.0);
        let hits = (0..50)
            .filter(|&seed| {
                let cfg = OptimizerConfig::defaults(Method::Pso).with_seed(seed);
                pso_run(&cfg, &b, &sphere).best_fitness < 1e-2
            })
            .count();
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn variants_improve_on_sphere() {
        let b = Bounds::uniform(4, -5.0, 5.0);
        for m in [Method::Cpso, Method::Aiwpso] {
            let cfg = OptimizerConfig::defaults(m).with_seed(2);
            let r = pso_run(&cfg, &b, &sphere);
            assert!(r.best_fitness < r.history[0], "{m}");
            assert!(r.best_fitness < 1e-1, "{m}: {}", r.best_fitness);
        }
    }

    #[test]
    fn logistic_map_stays_in_unit_interval() {
        let mut rng = seeded_rng(9);
        let mut z = LogisticMap::seeded(&mut rng);
        for _ in 0..10_000 {
            let v = z.next_value();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    proptest! {
        #[test]
        fn invariants_hold_each_step(seed in 0u64..200) {
            let b = Bounds::uniform(3, 0.0, 10.0);
            let mut rng = seeded_rng(seed);
            let positions = (0..8).map(|_| b.sample(&mut rng)).collect();
            let mut state = SwarmState::initialize(positions, &sphere);
            let params = PsoStepParams { w: 0.8, c_p: 0.7, c_g: 1.5, v_max: vec![2.0; 3] };
            let mut prev = state.pbest_fitness.clone();
            for _ in 0..10 {
                pso_step(&mut state, &params, &b, &sphere, &mut CoefficientSource::Uniform, &mut rng);
                for i in 0..state.len() {
                    prop_assert!(state.pbest_fitness[i] <= prev[i]);
                    prop_assert!(b.contains(&state.positions[i]));
                    prop_assert!(state.velocities[i].iter().all(|v| v.abs() <= 2.0));
                }
                let min = state.pbest_fitness.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert_eq!(state.gbest_fitness, min);
                prev = state.pbest_fitness.clone();
            }
        }
    }
}
