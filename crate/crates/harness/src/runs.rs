//! Repeated seeded runs, per-method summaries and pairwise t-tests.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use rmoqpso_core::benchmarks::BenchmarkSpec;
use rmoqpso_core::mo::{LqrProblem, ObjectiveVector, ParetoArchive};
use rmoqpso_core::optim::baseline::run_method;
use rmoqpso_core::optim::{Method, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::stats::{mean, sample_sd, welch_p, Direction, StatsError};
use crate::HarnessError;

/// One optimizer run and the solution it reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub benchmark: String,
    pub seed: u64,
    pub config: OptimizerConfig,
    pub position: Vec<f64>,
    pub objectives: ObjectiveVector,
    pub fitness: f64,
    pub evaluations: usize,
    pub wall_clock_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archive: Option<ParetoArchive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveStat {
    /// `None` when any sample is non-finite.
    pub mean: Option<f64>,
    /// Sample SD (divisor `N − 1`); absent for one run or a deterministic method.
    pub sd: Option<f64>,
    pub non_finite: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub stats: BTreeMap<String, ObjectiveStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub benchmark: String,
    pub objectives: Vec<String>,
    pub methods: Vec<MethodSummary>,
}

/// One-tailed test that `method_a` has the smaller mean on `objective`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestEntry {
    pub objective: String,
    pub method_a: Method,
    pub method_b: Method,
    pub t: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Objective names in export order; the last measured one is `Ess` or `IAE`.
pub fn objective_names(tail_label: &str) -> Vec<String> {
    ["J", "OS", "Tr", "Ts", tail_label, "fitness"].map(String::from).to_vec()
}

fn column(records: &[&RunRecord], index: usize) -> Vec<f64> {
    records
        .iter()
        .map(|r| if index < 5 { r.objectives.components()[index] } else { r.fitness })
        .collect()
}

fn stat(values: &[f64], deterministic: bool) -> ObjectiveStat {
    let non_finite = values.iter().filter(|v| !v.is_finite()).count();
    let finite = non_finite == 0 && !values.is_empty();
    ObjectiveStat {
        mean: finite.then(|| mean(values)),
        sd: (finite && values.len() > 1 && !deterministic).then(|| sample_sd(values)),
        non_finite,
    }
}

pub fn summarize_method(method: Method, records: &[&RunRecord], tail_label: &str) -> MethodSummary {
    let stats = objective_names(tail_label)
        .into_iter()
        .enumerate()
        .map(|(k, name)| (name, stat(&column(records, k), method.is_deterministic())))
        .collect();
    MethodSummary {
        method,
        runs: records.len(),
        stats,
    }
}

/// Runs `cfg` with seeds `base_seed..base_seed + count`.
pub fn repeated_runs(
    cfg: &OptimizerConfig,
    benchmark: &BenchmarkSpec,
    count: usize,
    base_seed: u64,
) -> Result<Vec<RunRecord>, HarnessError> {
    if count == 0 {
        return Err(HarnessError::Config("run count must be at least 1".into()));
    }
    cfg.validate()?;
    let problem = LqrProblem::new(benchmark.clone());
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let run_cfg = cfg.clone().with_seed(base_seed + k);
            let start = Instant::now();
            let out = run_method(&run_cfg, &problem)?;
            Ok(RunRecord {
                method: run_cfg.method,
                benchmark: benchmark.name.clone(),
                seed: run_cfg.seed,
                position: out.position.values,
                objectives: out.objectives,
                fitness: out.fitness,
                evaluations: out.evaluations,
                wall_clock_s: start.elapsed().as_secs_f64(),
                archive: out.archive,
                config: run_cfg,
            })
        })
        .collect()
}

pub fn summary_table(benchmark: &str, tail_label: &str, records: &[RunRecord]) -> SummaryTable {
    let mut seen: Vec<Method> = Vec::new();
    for r in records {
        if !seen.contains(&r.method) {
            seen.push(r.method);
        }
    }
    SummaryTable {
        benchmark: benchmark.to_string(),
        objectives: objective_names(tail_label),
        methods: seen
            .into_iter()
            .map(|m| {
                let rs: Vec<&RunRecord> = records.iter().filter(|r| r.method == m).collect();
                summarize_method(m, &rs, tail_label)
            })
            .collect(),
    }
}

/// Welch tests for every ordered method pair and objective.
pub fn t_test_matrix(records: &[RunRecord], tail_label: &str) -> Vec<TTestEntry> {
    let table = summary_table("", tail_label, records);
    let names = objective_names(tail_label);
    let mut out = Vec::new();
    for (k, objective) in names.iter().enumerate() {
        for a in &table.methods {
            for b in &table.methods {
                if a.method == b.method {
                    continue;
                }
                let pick = |m: Method| {
                    let rs: Vec<&RunRecord> = records.iter().filter(|r| r.method == m).collect();
                    column(&rs, k)
                };
                let entry = match welch_p(&pick(a.method), &pick(b.method), Direction::Less) {
                    Ok(r) => TTestEntry {
                        objective: objective.clone(),
                        method_a: a.method,
                        method_b: b.method,
                        t: r.t.is_finite().then_some(r.t),
                        df: Some(r.df),
                        p: Some(r.p),
                        note: None,
                    },
                    Err(e) => TTestEntry {
                        objective: objective.clone(),
                        method_a: a.method,
                        method_b: b.method,
                        t: None,
                        df: None,
                        p: None,
                        note: Some(match e {
                            StatsError::TooFewSamples(..) => "fewer than two runs".to_string(),
                            other => other.to_string(),
                        }),
                    },
                };
                out.push(entry);
            }
        }
    }
    out
}

/// Every method on one benchmark with shared seeds.
pub fn compare_methods(
    methods: &[Method],
    benchmark: &BenchmarkSpec,
    count: usize,
    base_seed: u64,
    adjust: impl Fn(&mut OptimizerConfig) -> Result<(), HarnessError>,
) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = Vec::new();
    for &m in methods {
        let mut cfg = OptimizerConfig::defaults(m);
        adjust(&mut cfg)?;
        records.extend(repeated_runs(&cfg, benchmark, count, base_seed)?);
    }
    Ok(records)
}
