//! Candidate evaluation, Pareto dominance and the aggregated fitness used by
//! the swarm.
//!
//! A candidate is the concatenation of the diagonals of Q and R. Evaluating
//! it runs the whole design pipeline: Riccati solve, gain, closed-loop
//! simulation, then the quadratic index and the time-domain measures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{BenchmarkSpec, TailKind};
use crate::control::{
    compute_gain, quadratic_index, simulate_closed_loop, solve_care, stability_check, WeightingConfig,
    R_EPSILON,
};
use crate::metrics::evaluate_response;

/// Default infeasibility penalty.
pub const DEFAULT_PHI: f64 = 10.0;
pub const DEFAULT_ARCHIVE_CAPACITY: usize = 200;
pub const DEFAULT_DWA_FREQUENCY: usize = 50;

/// Keeps `f_PR` representable when the sigmoid underflows.
const MIN_FACTOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoError {
    #[error("objective vectors come from different benchmarks ({0:?} vs {1:?})")]
    MixedBenchmarks(TailKind, TailKind),
    #[error("candidate is infeasible and cannot enter the archive")]
    InfeasibleCandidate,
    #[error("position has {got} entries, benchmark needs {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `[Q_11..Q_nn, R_11..R_mm]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePosition {
    pub values: Vec<f64>,
    pub n_states: usize,
}

impl CandidatePosition {
    pub fn new(values: Vec<f64>, n_states: usize) -> Self {
        debug_assert!(n_states <= values.len());
        Self { values, n_states }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn q(&self) -> &[f64] {
        &self.values[..self.n_states]
    }

    pub fn r(&self) -> &[f64] {
        &self.values[self.n_states..]
    }

    /// Whether entry `d` violates PSD Q (`< 0`) or PD R (`< ε_R`).
    pub fn entry_infeasible(&self, d: usize) -> bool {
        entry_infeasible(d, self.values[d], self.n_states)
    }

    pub fn is_feasible(&self) -> bool {
        (0..self.len()).all(|d| !self.entry_infeasible(d))
    }

    pub fn repair_probability(&self) -> f64 {
        repair_probability(&self.values, self.n_states)
    }

    /// Projection onto the feasible set used for measurement.
    pub fn measurement_weights(&self) -> WeightingConfig {
        WeightingConfig {
            q_diag: self.q().iter().map(|q| q.max(0.0)).collect(),
            r_diag: self.r().iter().map(|r| r.max(R_EPSILON)).collect(),
        }
    }

    pub fn projected_feasible(&self) -> CandidatePosition {
        let w = self.measurement_weights();
        let mut values = w.q_diag;
        values.extend(w.r_diag);
        CandidatePosition::new(values, self.n_states)
    }
}

pub(crate) fn entry_infeasible(d: usize, value: f64, n_states: usize) -> bool {
    if d < n_states {
        !(value >= 0.0)
    } else {
        !(value >= R_EPSILON)
    }
}

/// `1 - (#infeasible entries)/(n+m)`. A Q entry of exactly 0 counts as
/// feasible, an R entry below `ε_R` does not.
pub fn repair_probability(values: &[f64], n_states: usize) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let bad = values
        .iter()
        .enumerate()
        .filter(|(d, v)| entry_infeasible(*d, **v, n_states))
        .count();
    1.0 - bad as f64 / values.len() as f64
}

/// Objectives of one candidate; all minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub j: f64,
    pub os: f64,
    pub tr: f64,
    pub ts: f64,
    /// Ess or IAE depending on `tail_kind`.
    pub tail: f64,
    pub tail_kind: TailKind,
    pub feasible: bool,
    pub repair_prob: f64,
}

impl ObjectiveVector {
    pub fn new(j: f64, os: f64, tr: f64, ts: f64, tail: f64, tail_kind: TailKind) -> Self {
        Self {
            j,
            os,
            tr,
            ts,
            tail,
            tail_kind,
            feasible: true,
            repair_prob: 1.0,
        }
    }

    pub fn sentinel(tail_kind: TailKind) -> Self {
        let inf = f64::INFINITY;
        Self::new(inf, inf, inf, inf, inf, tail_kind)
    }

    /// `(J, OS, Tr, Ts, tail)`
    pub fn components(&self) -> [f64; 5] {
        [self.j, self.os, self.tr, self.ts, self.tail]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }

    /// Pareto dominance over the five minimized components.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        debug_assert_eq!(self.tail_kind, other.tail_kind);
        let mut strictly = false;
        for (a, b) in self.components().iter().zip(other.components().iter()) {
            if a > b {
                return false;
            }
            if a < b {
                strictly = true;
            }
        }
        strictly
    }
}

pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, MoError> {
    if a.tail_kind != b.tail_kind {
        return Err(MoError::MixedBenchmarks(a.tail_kind, b.tail_kind));
    }
    Ok(a.dominates(b))
}

/// Anything that maps a candidate to its objective vector.
pub trait ObjectiveProblem: Sync {
    fn dimension(&self) -> usize;
    fn n_states(&self) -> usize;
    fn tail_kind(&self) -> TailKind;
    fn evaluate(&self, values: &[f64]) -> ObjectiveVector;
}

/// The LQR design problem on one benchmark.
#[derive(Debug, Clone)]
pub struct LqrProblem {
    pub benchmark: BenchmarkSpec,
}

impl LqrProblem {
    pub fn new(benchmark: BenchmarkSpec) -> Self {
        Self { benchmark }
    }
}

impl ObjectiveProblem for LqrProblem {
    fn dimension(&self) -> usize {
        self.benchmark.dimension()
    }

    fn n_states(&self) -> usize {
        self.benchmark.n_states()
    }

    fn tail_kind(&self) -> TailKind {
        self.benchmark.tail_kind
    }

    fn evaluate(&self, values: &[f64]) -> ObjectiveVector {
        let pos = CandidatePosition::new(values.to_vec(), self.n_states());
        decode_and_evaluate(&pos, &self.benchmark).unwrap_or_else(|_| {
            let mut o = ObjectiveVector::sentinel(self.benchmark.tail_kind);
            o.feasible = pos.is_feasible();
            o.repair_prob = pos.repair_probability();
            o
        })
    }
}

/// Decode → Riccati → gain → simulate → measures. Solver failures come back
/// as an all-sentinel vector; only a wrongly sized position is an error.
pub fn decode_and_evaluate(
    pos: &CandidatePosition,
    benchmark: &BenchmarkSpec,
) -> Result<ObjectiveVector, MoError> {
    if pos.len() != benchmark.dimension() || pos.n_states != benchmark.n_states() {
        return Err(MoError::DimensionMismatch {
            expected: benchmark.dimension(),
            got: pos.len(),
        });
    }
    let feasible = pos.is_feasible();
    let repair_prob = pos.repair_probability();
    let tail_kind = benchmark.tail_kind;
    let mut out = ObjectiveVector::sentinel(tail_kind);
    out.feasible = feasible;
    out.repair_prob = repair_prob;

    let weights = pos.measurement_weights();
    let Ok(p) = solve_care(&benchmark.model, &weights) else {
        return Ok(out);
    };
    let Ok(gain) = compute_gain(&p, &benchmark.model, &weights) else {
        return Ok(out);
    };
    if !(stability_check(&benchmark.model, &gain) < 0.0) {
        return Ok(out);
    }
    let Ok(traj) = simulate_closed_loop(&benchmark.model, &gain, &benchmark.x0, benchmark.horizon, benchmark.dt)
    else {
        return Ok(out);
    };
    if traj.blown_up {
        return Ok(out);
    }
    let Ok(metrics) = evaluate_response(&traj, &benchmark.metric_spec, tail_kind == TailKind::Iae) else {
        return Ok(out);
    };
    out.j = quadratic_index(&traj, &weights);
    out.os = metrics.overshoot;
    out.tr = metrics.rise_time;
    out.ts = metrics.settling_time;
    out.tail = match tail_kind {
        TailKind::Ess => metrics.steady_state_error,
        TailKind::Iae => metrics.iae.unwrap_or(f64::INFINITY),
    };
    Ok(out)
}

/// `#{x : i ≺ x} - #{x : x ≺ i}` over the other members.
pub fn domination_reward(i: usize, swarm: &[ObjectiveVector]) -> i64 {
    let me = &swarm[i];
    swarm
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != i)
        .map(|(_, other)| {
            if me.dominates(other) {
                1
            } else if other.dominates(me) {
                -1
            } else {
                0
            }
        })
        .sum()
}

pub fn domination_rewards(swarm: &[ObjectiveVector]) -> Vec<i64> {
    let s = swarm.len();
    let mut rewards = vec![0i64; s];
    for i in 0..s {
        for k in (i + 1)..s {
            if swarm[i].dominates(&swarm[k]) {
                rewards[i] += 1;
                rewards[k] -= 1;
            } else if swarm[k].dominates(&swarm[i]) {
                rewards[k] += 1;
                rewards[i] -= 1;
            }
        }
    }
    rewards
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyMode {
    /// `sigmoid(|S|·R) · P_r · φ`, as printed.
    Literal,
    /// `sigmoid(-|S|·R) · (1 or φ)`: dominant particles shrink their
    /// fitness, infeasible ones are inflated by φ.
    #[default]
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub mode: PenaltyMode,
    pub phi: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            mode: PenaltyMode::Corrected,
            phi: DEFAULT_PHI,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Penalty-reward factor from a precomputed domination reward.
pub fn penalty_reward_factor_from(
    reward: i64,
    swarm_size: usize,
    feasible: bool,
    repair_prob: f64,
    penalty: &PenaltyConfig,
) -> f64 {
    let s = swarm_size as f64;
    match penalty.mode {
        PenaltyMode::Literal => sigmoid(s * reward as f64) * repair_prob * penalty.phi,
        PenaltyMode::Corrected => {
            let scale = if feasible { 1.0 } else { penalty.phi };
            sigmoid(-s * reward as f64) * scale
        }
    }
}

pub fn penalty_reward_factor(i: usize, swarm: &[ObjectiveVector], penalty: &PenaltyConfig) -> f64 {
    let reward = domination_reward(i, swarm);
    penalty_reward_factor_from(reward, swarm.len(), swarm[i].feasible, swarm[i].repair_prob, penalty)
}

/// Dynamic weighted aggregation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwaSchedule {
    pub frequency: usize,
}

impl Default for DwaSchedule {
    fn default() -> Self {
        Self {
            frequency: DEFAULT_DWA_FREQUENCY,
        }
    }
}

impl DwaSchedule {
    pub fn weights(&self, t: usize) -> (f64, f64) {
        dwa_weights(t, self.frequency)
    }
}

/// `w1 = |sin(2πt/F)|`, `w2 = 1 - w1`.
pub fn dwa_weights(t: usize, frequency: usize) -> (f64, f64) {
    let f = frequency.max(1);
    // reduce first so t and t + F give bit-identical weights
    let phase = (t % f) as f64 / f as f64;
    let w1 = (2.0 * std::f64::consts::PI * phase).sin().abs().min(1.0);
    (w1, 1.0 - w1)
}

/// Applies a multiplicative factor so that a factor below one always
/// favours the candidate and a factor above one always penalizes it, even
/// when the base value is negative (`log10 J < 0`).
pub fn apply_factor(base: f64, factor: f64) -> f64 {
    if base >= 0.0 {
        base * factor
    } else {
        base / factor.max(MIN_FACTOR)
    }
}

/// `f_PR · (w1·(log10 J + tail) + w2·(OS + Ts + rise_sign·Tr))`.
pub fn aggregate_fitness(obj: &ObjectiveVector, w1: f64, w2: f64, f_pr: f64, rise_sign: f64) -> f64 {
    if !obj.is_finite() {
        return f64::INFINITY;
    }
    let log_j = obj.j.max(f64::MIN_POSITIVE).log10();
    let base = w1 * (log_j + obj.tail) + w2 * (obj.os + obj.ts + rise_sign * obj.tr);
    apply_factor(base, f_pr)
}

/// Fixed-weight scalarization (`w1 = w2 = 0.5`, `f_PR = 1`) used by the
/// single-objective baselines and for picking one representative solution.
pub fn scalarized_fitness(obj: &ObjectiveVector, rise_sign: f64) -> f64 {
    aggregate_fitness(obj, 0.5, 0.5, 1.0, rise_sign)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub position: CandidatePosition,
    pub objectives: ObjectiveVector,
}

/// Bounded set of mutually non-dominated feasible solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    capacity: usize,
}

impl Default for ParetoArchive {
    fn default() -> Self {
        Self::new(DEFAULT_ARCHIVE_CAPACITY)
    }
}

impl ParetoArchive {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Returns whether the candidate was kept. Candidates with non-finite
    /// objectives, dominated candidates and exact objective duplicates are
    /// turned away.
    pub fn insert(&mut self, position: CandidatePosition, objectives: ObjectiveVector) -> Result<bool, MoError> {
        if !objectives.feasible || !position.is_feasible() {
            return Err(MoError::InfeasibleCandidate);
        }
        if let Some(first) = self.entries.first() {
            if first.objectives.tail_kind != objectives.tail_kind {
                return Err(MoError::MixedBenchmarks(first.objectives.tail_kind, objectives.tail_kind));
            }
        }
        if !objectives.is_finite() {
            return Ok(false);
        }
        let rejected = self.entries.iter().any(|e| {
            e.objectives.dominates(&objectives) || e.objectives.components() == objectives.components()
        });
        if rejected {
            return Ok(false);
        }
        self.entries.retain(|e| !objectives.dominates(&e.objectives));
        self.entries.push(ArchiveEntry { position, objectives });
        if self.entries.len() > self.capacity {
            let crowding = crowding_distances(&self.entries);
            let evict = crowding
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("archive is non-empty");
            self.entries.remove(evict);
        }
        Ok(true)
    }

    /// Entry minimizing [`scalarized_fitness`].
    pub fn best_scalarized(&self, rise_sign: f64) -> Option<&ArchiveEntry> {
        self.entries.iter().min_by(|a, b| {
            scalarized_fitness(&a.objectives, rise_sign).total_cmp(&scalarized_fitness(&b.objectives, rise_sign))
        })
    }
}

/// Crowding distance in objective space; boundary entries get `+inf`.
pub fn crowding_distances(entries: &[ArchiveEntry]) -> Vec<f64> {
    let n = entries.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for c in 0..5 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            entries[a].objectives.components()[c].total_cmp(&entries[b].objectives.components()[c])
        });
        let lo = entries[order[0]].objectives.components()[c];
        let hi = entries[order[n - 1]].objectives.components()[c];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let prev = entries[order[w - 1]].objectives.components()[c];
            let next = entries[order[w + 1]].objectives.components()[c];
            dist[order[w]] += (next - prev) / span;
        }
    }
    dist
}

/// Column names of the exported front: `Q1..Qn, R1..Rm, J, OS, Tr, Ts, Ess|IAE`.
pub fn pareto_header(n_states: usize, n_inputs: usize, tail_kind: TailKind) -> Vec<String> {
    let mut header: Vec<String> = (1..=n_states).map(|i| format!("Q{i}")).collect();
    header.extend((1..=n_inputs).map(|j| format!("R{j}")));
    header.extend(["J", "OS", "Tr", "Ts"].map(String::from));
    header.push(tail_kind.label().to_string());
    header
}
