//! Full-factorial parameter sweeps.

use rayon::prelude::*;
use rmoqpso_core::benchmarks::BenchmarkSpec;
use rmoqpso_core::mo::LqrProblem;
use rmoqpso_core::optim::baseline::run_method;
use rmoqpso_core::optim::{Method, OptimizerConfig};
use serde::{Deserialize, Serialize};

use crate::stats::mean;
use crate::HarnessError;

pub const DEFAULT_REPETITIONS: usize = 5;

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(name: &str, lower: f64, upper: f64, step: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            step,
        }
    }

    /// `lower, lower + step, …` up to `upper`, rounded to 1e−9.
    pub fn levels(&self) -> Result<Vec<f64>, HarnessError> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.step.is_finite() && self.step > 0.0) {
            return Err(HarnessError::Config(format!(
                "range for {} needs finite bounds and a positive step",
                self.name
            )));
        }
        if self.upper < self.lower {
            return Err(HarnessError::EmptyGrid);
        }
        let count = ((self.upper - self.lower) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|k| ((self.lower + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub method: Method,
    pub benchmark: String,
    pub params: Vec<ParamRange>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Full,
    Reduced,
}

impl SweepPlan {
    /// Published ranges and steps for `method`.
    pub fn full(method: Method, benchmark: &str) -> Self {
        Self::standard(method, benchmark, GridScale::Full)
    }

    /// Coarser steps and two repetitions, for quick runs.
    pub fn reduced(method: Method, benchmark: &str) -> Self {
        Self::standard(method, benchmark, GridScale::Reduced)
    }

    pub fn standard(method: Method, benchmark: &str, scale: GridScale) -> Self {
        let full = scale == GridScale::Full;
        let pick = |f: f64, r: f64| if full { f } else { r };
        let mut params = Vec::new();
        let swarm = ParamRange::new("swarm", 10.0, 100.0, pick(10.0, 30.0));
        let coef = |name: &str| ParamRange::new(name, 0.5, 2.0, pick(0.1, 0.5));
        match method {
            Method::Pso | Method::Cpso | Method::Aiwpso => {
                params.extend([coef("c_p"), coef("c_g"), swarm]);
            }
            Method::Ga => params.extend([
                ParamRange::new("p_c", 0.3, 0.9, pick(0.1, 0.3)),
                ParamRange::new("p_m", 0.05, 0.3, pick(0.05, 0.125)),
                swarm,
            ]),
            // DE reads the GA ranges with the roles swapped
            Method::De => params.extend([
                ParamRange::new("de_f", 0.3, 0.9, pick(0.1, 0.3)),
                ParamRange::new("de_cr", 0.05, 0.3, pick(0.05, 0.125)),
                swarm,
            ]),
            Method::Lm => params.push(ParamRange::new("lambda", 5.0, 15.0, pick(1.0, 5.0))),
            // g as a multiple of ln √2, kept inside (ln √2, 1]
            Method::Qpso | Method::RmoQpso => params.extend([ParamRange::new("g_coef", 1.5, 2.5, 0.5), swarm]),
            Method::Abc => params.push(swarm),
        }
        params.push(ParamRange::new("iterations", 25.0, 150.0, pick(25.0, 50.0)));
        Self {
            method,
            benchmark: benchmark.to_string(),
            params,
            repetitions: if full { DEFAULT_REPETITIONS } else { 2 },
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config("repetitions must be positive".into()));
        }
        if self.params.is_empty() {
            return Err(HarnessError::EmptyGrid);
        }
        for p in &self.params {
            p.levels()?;
        }
        Ok(())
    }

    /// Cartesian product of all levels, last parameter varying fastest.
    pub fn cells(&self) -> Result<Vec<Vec<(String, f64)>>, HarnessError> {
        self.validate()?;
        let mut cells: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for p in &self.params {
            let levels = p.levels()?;
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    levels.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push((p.name.clone(), v));
                        c
                    })
                })
                .collect();
        }
        Ok(cells)
    }

    pub fn config_for(&self, cell: &[(String, f64)]) -> Result<OptimizerConfig, HarnessError> {
        let mut cfg = OptimizerConfig::defaults(self.method);
        for (name, value) in cell {
            cfg.set_param(name, *value)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub params: Vec<(String, f64)>,
    pub seeds: Vec<u64>,
    pub fitness: Vec<f64>,
    pub mean_fitness: f64,
}

impl CellResult {
    pub fn summary_line(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("cell {}: {} mean fitness {:.4}", self.index, params.join(" "), self.mean_fitness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub best_index: usize,
    pub best_config: OptimizerConfig,
    pub cells: Vec<CellResult>,
}

/// Sweep with a caller-supplied scorer; cell `c`, repetition `r` uses seed
/// `base_seed + c·repetitions + r`.
pub fn factorial_sweep_with<F>(plan: &SweepPlan, score: F) -> Result<SweepResult, HarnessError>
where
    F: Fn(&OptimizerConfig) -> Result<f64, HarnessError> + Sync,
{
    let cells = plan.cells()?;
    let configs = cells
        .iter()
        .map(|c| plan.config_for(c))
        .collect::<Result<Vec<_>, _>>()?;
    let reps = plan.repetitions;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = plan.base_seed + (c * reps + r) as u64;
            score(&configs[c].clone().with_seed(seed)).map(|f| (seed, f))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let results: Vec<CellResult> = cells
        .into_iter()
        .enumerate()
        .map(|(c, params)| {
            let chunk = &scores[c * reps..(c + 1) * reps];
            let fitness: Vec<f64> = chunk.iter().map(|s| if s.1.is_nan() { f64::INFINITY } else { s.1 }).collect();
            CellResult {
                index: c,
                params,
                seeds: chunk.iter().map(|s| s.0).collect(),
                mean_fitness: mean(&fitness),
                fitness,
            }
        })
        .collect();
    let best_index = results
        .iter()
        .min_by(|a, b| a.mean_fitness.total_cmp(&b.mean_fitness).then(a.index.cmp(&b.index)))
        .map(|c| c.index)
        .ok_or(HarnessError::EmptyGrid)?;
    Ok(SweepResult {
        plan: plan.clone(),
        best_config: configs[best_index].clone().with_seed(plan.base_seed),
        best_index,
        cells: results,
    })
}

/// Sweep scored by the fixed-weight fitness of each run's reported solution.
pub fn factorial_sweep(plan: &SweepPlan, benchmark: &BenchmarkSpec) -> Result<SweepResult, HarnessError> {
    let problem = LqrProblem::new(benchmark.clone());
    factorial_sweep_with(plan, |cfg| Ok(run_method(cfg, &problem)?.fitness))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn plan(params: Vec<ParamRange>, repetitions: usize) -> SweepPlan {
        SweepPlan {
            method: Method::Pso,
            benchmark: "pendulum".into(),
            params,
            repetitions,
            base_seed: 100,
        }
    }

    #[test]
    fn levels_include_both_ends() {
        assert_eq!(ParamRange::new("c_p", 0.5, 2.0, 0.1).levels().unwrap().len(), 16);
        assert_eq!(ParamRange::new("p_m", 0.05, 0.3, 0.05).levels().unwrap(), vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3]);
        assert_eq!(ParamRange::new("T", 25.0, 150.0, 25.0).levels().unwrap().len(), 6);
        assert_eq!(ParamRange::new("x", 1.0, 1.0, 1.0).levels().unwrap(), vec![1.0]);
        assert!(matches!(ParamRange::new("x", 2.0, 1.0, 1.0).levels(), Err(HarnessError::EmptyGrid)));
        assert!(matches!(ParamRange::new("x", 0.0, 1.0, 0.0).levels(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn single_value_returns_that_config() {
        let p = plan(vec![ParamRange::new("c_p", 1.1, 1.1, 0.1)], 3);
        let calls = AtomicUsize::new(0);
        let r = factorial_sweep_with(&p, |_| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(calls.into_inner(), 3);
        assert_eq!(r.best_config.c_p, 1.1);
        assert_eq!(r.cells[0].seeds, vec![100, 101, 102]);
    }

    #[test]
    fn grid_cardinality_and_best_cell() {
        let p = plan(
            vec![ParamRange::new("c_p", 0.5, 1.5, 0.5), ParamRange::new("c_g", 0.5, 2.0, 0.5)],
            2,
        );
        let calls = AtomicUsize::new(0);
        let r = factorial_sweep_with(&p, |cfg| {
            calls.fetch_add(1, Ordering::Relaxed);
            Ok((cfg.c_p - 1.0).powi(2) + (cfg.c_g - 1.5).powi(2))
        })
        .unwrap();
        assert_eq!(r.cells.len(), 12);
        assert_eq!(calls.into_inner(), 24);
        assert_eq!((r.best_config.c_p, r.best_config.c_g), (1.0, 1.5));
        let mut seeds: Vec<u64> = r.cells.iter().flat_map(|c| c.seeds.clone()).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 24);
    }

    #[test]
    fn empty_and_invalid_plans() {
        assert!(matches!(plan(vec![], 5).cells(), Err(HarnessError::EmptyGrid)));
        assert!(matches!(plan(vec![ParamRange::new("c_p", 1.0, 1.0, 1.0)], 0).cells(), Err(HarnessError::Config(_))));
        let bogus = plan(vec![ParamRange::new("bogus", 1.0, 1.0, 1.0)], 1);
        assert!(matches!(factorial_sweep_with(&bogus, |_| Ok(0.0)), Err(HarnessError::Config(_))));
    }

    #[test]
    fn standard_grids_are_valid_configs() {
        for m in Method::ALL {
            for plan in [SweepPlan::full(m, "pendulum"), SweepPlan::reduced(m, "pendulum")] {
                for cell in plan.cells().unwrap() {
                    plan.config_for(&cell).unwrap();
                }
            }
        }
        let pso: usize = SweepPlan::full(Method::Pso, "p").cells().unwrap().len();
        assert_eq!(pso, 16 * 16 * 10 * 6);
        assert_eq!(SweepPlan::full(Method::Ga, "p").cells().unwrap().len(), 7 * 6 * 10 * 6);
        assert_eq!(SweepPlan::full(Method::Lm, "p").repetitions, 5);
    }

    #[test]
    fn plan_json_round_trip_and_default_repetitions() {
        let p = SweepPlan::reduced(Method::De, "flight");
        let back: SweepPlan = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bare: SweepPlan =
            serde_json::from_str(r#"{"method":"ga","benchmark":"pendulum","params":[{"name":"p_c","lower":0.3,"upper":0.9,"step":0.1}]}"#)
                .unwrap();
        assert_eq!(bare.repetitions, 5);
    }
}
