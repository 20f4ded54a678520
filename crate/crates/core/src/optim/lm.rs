//! Levenberg-Marquardt with a fixed damping factor and a central
//! finite-difference Jacobian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{sanitize, Bounds, OptimResult};

/// Stand-in for a non-finite residual so the Jacobian stays finite.
const RESIDUAL_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmParams {
    pub lambda: f64,
    pub iterations: usize,
    /// Absolute finite-difference step.
    pub fd_step: f64,
}

fn capped(r: Vec<f64>) -> Vec<f64> {
    r.into_iter()
        .map(|v| if v.is_finite() { v.clamp(-RESIDUAL_CAP, RESIDUAL_CAP) } else { RESIDUAL_CAP })
        .collect()
}

/// Minimizes `‖r(x)‖²` from `x0`, tracking the best point under `score`.
/// Every step is taken; the damping never adapts.
pub fn lm_run<R, S>(residual: &R, score: &S, x0: &[f64], bounds: &Bounds, params: &LmParams, verbose: bool) -> OptimResult
where
    R: Fn(&[f64]) -> Vec<f64> + Sync,
    S: Fn(&[f64]) -> f64 + Sync,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let mut best = (x.clone(), sanitize(score(&x)));
    let mut history = vec![best.1];
    let mut evaluations = 1;

    for t in 0..params.iterations {
        let r0 = capped(residual(&x));
        let cols: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|d| {
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[d] = bounds.clamp_component(d, x[d] + params.fd_step);
                lo[d] = bounds.clamp_component(d, x[d] - params.fd_step);
                let h = hi[d] - lo[d];
                if h <= 0.0 {
                    return vec![0.0; r0.len()];
                }
                let rh = capped(residual(&hi));
                let rl = capped(residual(&lo));
                rh.iter().zip(&rl).map(|(a, b)| (a - b) / h).collect()
            })
            .collect();
        evaluations += 1 + 2 * dim;
        let jac = DMatrix::from_fn(r0.len(), dim, |i, d| cols[d][i]);
        let r = DVector::from_vec(r0);
        let lhs = jac.transpose() * &jac + DMatrix::identity(dim, dim) * params.lambda;
        let rhs = -(jac.transpose() * r);
        let Some(step) = lhs.lu().solve(&rhs) else {
            break;
        };
        if step.iter().any(|v| !v.is_finite()) {
            break;
        }
        for d in 0..dim {
            x[d] = bounds.clamp_component(d, x[d] + step[d]);
        }
        let s = sanitize(score(&x));
        evaluations += 1;
        if s < best.1 {
            best = (x.clone(), s);
        }
        history.push(best.1);
        if verbose {
            eprintln!("lm t={} best={:.6e}", t + 1, best.1);
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

    #[test]
    fn converges_to_quadratic_minimizer() {
        // r(x) = A x - b with singular values of A at least 2
        let a = DMatrix::from_row_slice(4, 3, &[3.0, 1.0, 0.0, 0.0, 2.5, 0.5, 0.0, 0.0, 2.0, 1.0, 0.0, 1.0]);
        let x_star = DVector::from_vec(vec![1.5, -2.0, 0.75]);
        let b = &a * &x_star;
        let res = |x: &[f64]| -> Vec<f64> { (&a * DVector::from_column_slice(x) - &b).iter().cloned().collect() };
        let score = |x: &[f64]| res(x).iter().map(|v| v * v).sum::<f64>();
        let bounds = Bounds::uniform(3, -1000.0, 1000.0);
        let params = LmParams {
            lambda: 10.0,
            iterations: 150,
            fd_step: 0.1,
        };
        let out = lm_run(&res, &score, &[0.0; 3], &bounds, &params, false);
        for (x, e) in out.best_position.iter().zip(x_star.iter()) {
            assert!((x - e).abs() < 1e-6, "{:?}", out.best_position);
        }
    }

    #[test]
    fn zero_iterations_returns_start() {
        let res = |x: &[f64]| vec![x[0] - 1.0];
        let score = |x: &[f64]| (x[0] - 1.0).powi(2);
        let p = LmParams {
            lambda: 10.0,
            iterations: 0,
            fd_step: 0.1,
        };
        let out = lm_run(&res, &score, &[5.0], &Bounds::uniform(1, 0.0, 10.0), &p, false);
        assert_eq!(out.best_position, vec![5.0]);
        assert_eq!(out.best_fitness, 16.0);
    }
}
