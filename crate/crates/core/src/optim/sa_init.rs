//! Simulated-annealing warm start for the swarm.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stream_rng, Bounds, OptimError, DEFAULT_X_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaInitParams {
    /// Annealing steps per particle.
    pub t_ini: usize,
    /// Cooling rate in `T = exp(-α t)`.
    pub alpha: f64,
    /// Gaussian neighbor scale.
    pub sigma: f64,
    /// Per-component mutation probability.
    pub p_succ: f64,
}

impl Default for SaInitParams {
    fn default() -> Self {
        Self {
            t_ini: 10,
            alpha: 0.1,
            sigma: 0.1 * DEFAULT_X_MAX,
            p_succ: 0.5,
        }
    }
}

impl SaInitParams {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(OptimError::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(OptimError::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.p_succ) {
            return Err(OptimError::InvalidParameter(format!("p_succ must lie in [0, 1], got {}", self.p_succ)));
        }
        Ok(())
    }
}

/// A warm-started particle with the weights it was annealed under.
#[derive(Debug, Clone, PartialEq)]
pub struct SaParticle {
    pub position: Vec<f64>,
    pub energy: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Metropolis acceptance; `delta = E_old - E_new` (positive is better).
fn accept(delta: f64, temperature: f64, rng: &mut impl Rng) -> bool {
    if delta.is_nan() {
        return false;
    }
    delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp()
}

/// Draws `size` uniform particles in `bounds` and anneals each one for
/// `t_ini` steps under its own random aggregation weights. Particle `i`
/// uses RNG stream `i` of `seed`, so the result does not depend on thread
/// scheduling.
pub fn sa_informed_init<F>(params: &SaInitParams, size: usize, bounds: &Bounds, energy: &F, seed: u64) -> Vec<SaParticle>
where
    F: Fn(&[f64], f64, f64) -> f64 + Sync,
{
    (0..size)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut x = bounds.sample(&mut rng);
            let w1: f64 = rng.random();
            let w2 = 1.0 - w1;
            let mut e = energy(&x, w1, w2);
            let normal = (params.sigma > 0.0).then(|| Normal::new(0.0, params.sigma).expect("valid sigma"));
            for t in 1..=params.t_ini {
                let temperature = (-params.alpha * t as f64).exp();
                let mut y = x.clone();
                for (d, v) in y.iter_mut().enumerate() {
                    if rng.random::<f64>() < params.p_succ {
                        if let Some(n) = &normal {
                            *v = bounds.clamp_component(d, *v + n.sample(&mut rng));
                        }
                    }
                }
                let e_new = energy(&y, w1, w2);
                if accept(e - e_new, temperature, &mut rng) {
                    x = y;
                    e = e_new;
                }
            }
            SaParticle {
                position: x,
                energy: e,
                w1,
                w2,
            }
        })
        .collect()
}

/// The uniform draw that [`sa_informed_init`] anneals from.
pub fn uniform_init(size: usize, bounds: &Bounds, seed: u64) -> Vec<Vec<f64>> {
    (0..size)
        .map(|i| bounds.sample(&mut stream_rng(seed, i as u64)))
        .collect()
}
