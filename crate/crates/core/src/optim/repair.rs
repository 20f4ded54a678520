//! Maps infeasible weight vectors back into the feasible set by blending
//! two good feasible neighbors.

use rand::seq::index::sample;
use rand::Rng;

use super::OptimError;
use crate::control::R_EPSILON;
use crate::mo::CandidatePosition;

pub const NEIGHBORHOOD: usize = 5;

/// Replaces each infeasible entry by `λ·p1 + (1−λ)·p2` (or the swapped
/// blend), leaving feasible entries alone.
pub fn repair_with(pos: &CandidatePosition, p1: &[f64], p2: &[f64], lambda: f64, swap: bool) -> CandidatePosition {
    let mut out = pos.clone();
    for d in 0..pos.len() {
        if pos.entry_infeasible(d) {
            let (a, b) = if swap { (p2[d], p1[d]) } else { (p1[d], p2[d]) };
            out.values[d] = lambda * a + (1.0 - lambda) * b;
            // blending two values >= ε_R can round a hair below it
            if d >= pos.n_states {
                out.values[d] = out.values[d].max(R_EPSILON);
            } else {
                out.values[d] = out.values[d].max(0.0);
            }
        }
    }
    out
}

/// Picks up to five random feasible members, takes the two fittest as
/// donors and blends them into the infeasible entries of `pos`.
pub fn repair_particle(
    pos: &CandidatePosition,
    swarm: &[CandidatePosition],
    fitness: &[f64],
    rng: &mut impl Rng,
) -> Result<CandidatePosition, OptimError> {
    if pos.is_feasible() {
        return Ok(pos.clone());
    }
    let feasible: Vec<usize> = (0..swarm.len()).filter(|&i| swarm[i].is_feasible()).collect();
    if feasible.len() < 2 {
        return Err(OptimError::NoFeasibleDonors);
    }
    let k = NEIGHBORHOOD.min(feasible.len());
    let mut hood: Vec<usize> = sample(rng, feasible.len(), k).into_iter().map(|j| feasible[j]).collect();
    hood.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    let lambda: f64 = rng.random();
    let swap: bool = rng.random();
    Ok(repair_with(pos, &swarm[hood[0]].values, &swarm[hood[1]].values, lambda, swap))
}

/// [`repair_particle`], falling back to a uniform redraw in `(0, x_max]`
/// of the infeasible entries when there are not enough donors.
pub fn repair_or_resample(
    pos: &CandidatePosition,
    swarm: &[CandidatePosition],
    fitness: &[f64],
    x_max: f64,
    rng: &mut impl Rng,
) -> CandidatePosition {
    match repair_particle(pos, swarm, fitness, rng) {
        Ok(p) => p,
        Err(_) => {
            let mut out = pos.clone();
            for d in 0..pos.len() {
                if pos.entry_infeasible(d) {
                    let u = 1.0 - rng.random::<f64>();
                    out.values[d] = (u * x_max).max(if d >= pos.n_states { R_EPSILON } else { 0.0 });
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::seeded_rng;
    use proptest::prelude::*;

    #[test]
    fn feasible_input_is_unchanged() {
        let p = CandidatePosition::new(vec![1.0, 0.0, 2.0], 2);
        let mut rng = seeded_rng(0);
        assert_eq!(repair_particle(&p, &[], &[], &mut rng).unwrap(), p);
    }

    #[test]
    fn midpoint_blend() {
        let p = CandidatePosition::new(vec![-1.0], 1);
        assert_eq!(repair_with(&p, &[2.0], &[4.0], 0.5, false).values, vec![3.0]);
        assert_eq!(repair_with(&p, &[2.0], &[4.0], 0.5, true).values, vec![3.0]);
    }

    #[test]
    fn needs_two_donors() {
        let p = CandidatePosition::new(vec![-1.0, 1.0], 1);
        let swarm = vec![CandidatePosition::new(vec![1.0, 1.0], 1), p.clone()];
        let mut rng = seeded_rng(0);
        assert_eq!(repair_particle(&p, &swarm, &[0.0, 0.0], &mut rng), Err(OptimError::NoFeasibleDonors));
        let fixed = repair_or_resample(&p, &swarm, &[0.0, 0.0], 10.0, &mut rng);
        assert!(fixed.is_feasible());
        assert_eq!(fixed.values[1], 1.0);
    }

    proptest! {
        #[test]
        fn output_is_always_feasible(
            vals in proptest::collection::vec(-5.0f64..5.0, 5),
            donors in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 5), 2..8),
            seed in 0u64..1000,
        ) {
            let n = 3;
            let pos = CandidatePosition::new(vals, n);
            let swarm: Vec<CandidatePosition> = donors
                .into_iter()
                .map(|mut v| { for r in &mut v[n..] { *r = r.max(R_EPSILON); } CandidatePosition::new(v, n) })
                .collect();
            let fit: Vec<f64> = (0..swarm.len()).map(|i| i as f64).collect();
            let mut rng = seeded_rng(seed);
            let out = repair_particle(&pos, &swarm, &fit, &mut rng).unwrap();
            prop_assert_eq!(out.repair_probability(), 1.0);
            for d in 0..pos.len() {
                if !pos.entry_infeasible(d) {
                    prop_assert_eq!(out.values[d], pos.values[d]);
                }
            }
        }
    }
}
