//! Result files: Pareto front, time series, summary and per-run records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rmoqpso_core::benchmarks::{BenchmarkDocument, BenchmarkSpec, TailKind};
use rmoqpso_core::control::{
    compute_gain, simulate_closed_loop, solve_care, stability_check, GainMatrix, Trajectory, WeightingConfig,
};
use rmoqpso_core::mo::{pareto_header, ParetoArchive, PenaltyMode};
use rmoqpso_core::optim::OptimizerConfig;
use serde::{Deserialize, Serialize};

use crate::runs::{RunRecord, SummaryTable, TTestEntry};
use crate::sweep::SweepResult;
use crate::HarnessError;

pub const REPRESENTATIVE_RULE: &str =
    "archive member minimizing 0.5*(log10 J + tail) + 0.5*(OS + Ts + rise_sign*Tr) with f_PR = 1";

pub fn write_pareto_csv(
    path: &Path,
    archive: &ParetoArchive,
    n_states: usize,
    n_inputs: usize,
    tail_kind: TailKind,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(pareto_header(n_states, n_inputs, tail_kind))?;
    for e in archive.entries() {
        let objectives = e.objectives.components();
        let row = e
            .position
            .values
            .iter()
            .chain(objectives.iter())
            .map(|v| v.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeseries_csv(
    path: &Path,
    traj: &Trajectory,
    state_names: &[String],
    input_names: &[String],
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    let header = std::iter::once("t".to_string())
        .chain(state_names.iter().cloned())
        .chain(input_names.iter().cloned());
    w.write_record(header)?;
    for k in 0..traj.len() {
        let (x, u) = (traj.states.column(k), traj.inputs.column(k));
        let row = std::iter::once(traj.times[k])
            .chain(x.iter().copied())
            .chain(u.iter().copied())
            .map(|v| v.to_string());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Settings that change how fitness is computed, echoed for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFlags {
    pub penalty_mode: PenaltyMode,
    pub phi: f64,
    pub rise_sign: f64,
    pub dwa_frequency: usize,
    pub archive_all: bool,
    pub representative_rule: String,
}

impl ModeFlags {
    pub fn from_config(cfg: &OptimizerConfig) -> Self {
        Self {
            penalty_mode: cfg.penalty.mode,
            phi: cfg.penalty.phi,
            rise_sign: cfg.rise_sign,
            dwa_frequency: cfg.dwa_frequency,
            archive_all: cfg.archive_all,
            representative_rule: REPRESENTATIVE_RULE.to_string(),
        }
    }
}

pub fn metric_definitions(spec: &BenchmarkSpec) -> BTreeMap<String, String> {
    let m = &spec.metric_spec;
    let mut d = BTreeMap::new();
    d.insert("signal".into(), m.source.to_string());
    d.insert("J".into(), "trapezoidal integral of x'Qx + u'Ru over the horizon".into());
    d.insert("OS".into(), "largest excursion past zero opposite to y(0)".into());
    d.insert(
        "Tr".into(),
        format!("time for |y| to fall from {}|y(0)| to {}|y(0)|", m.rise_hi, m.rise_lo),
    );
    d.insert(
        "Ts".into(),
        format!("first time after which |y| stays within {}|y(0)|", m.settle_band),
    );
    d.insert(
        "Ess".into(),
        format!("mean |y| over the final {} of the horizon", m.tail_fraction),
    );
    d.insert("IAE".into(), "trapezoidal integral of |y| over the horizon".into());
    d.insert("fitness".into(), REPRESENTATIVE_RULE.into());
    d
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub benchmark: BenchmarkDocument,
    pub base_seed: u64,
    pub runs_per_method: usize,
    pub configs: Vec<OptimizerConfig>,
    pub modes: ModeFlags,
    pub metric_definitions: BTreeMap<String, String>,
    pub summary: SummaryTable,
    pub t_tests: Vec<TTestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, doc: &SummaryDocument) -> Result<(), HarnessError> {
    write_json(path, doc)
}

pub fn load_summary(path: &Path) -> Result<SummaryDocument, HarnessError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Per-run records including wall-clock times; kept apart from the summary
/// so that the summary is reproducible byte for byte.
pub fn write_runs(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    write_json(path, &records)
}

/// Controller file for `simulate`: either weights or an explicit gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    /// Row-major `m × n` gain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
}

impl GainsDocument {
    pub fn gain(&self, spec: &BenchmarkSpec) -> Result<GainMatrix, HarnessError> {
        let (n, m) = (spec.n_states(), spec.n_inputs());
        if let Some(rows) = &self.k {
            if rows.len() != m || rows.iter().any(|r| r.len() != n) {
                return Err(HarnessError::Config(format!("gain must be {m} x {n}")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            return Ok(GainMatrix::new(DMatrix::from_row_slice(m, n, &flat)));
        }
        let (Some(q), Some(r)) = (&self.q, &self.r) else {
            return Err(HarnessError::Config("gains file needs `k` or both `q` and `r`".into()));
        };
        let w = WeightingConfig::new(q.clone(), r.clone()).map_err(|e| HarnessError::Config(e.to_string()))?;
        let p = solve_care(&spec.model, &w).map_err(|e| HarnessError::Numerical(e.to_string()))?;
        compute_gain(&p, &spec.model, &w).map_err(|e| HarnessError::Numerical(e.to_string()))
    }

    pub fn from_gain(q: Vec<f64>, r: Vec<f64>, gain: &GainMatrix) -> Self {
        let k = gain.matrix();
        Self {
            q: Some(q),
            r: Some(r),
            k: Some(k.row_iter().map(|row| row.iter().copied().collect()).collect()),
        }
    }
}

/// Closed-loop response of `spec` under the controller in `gains`.
pub fn simulate_gains(spec: &BenchmarkSpec, gains: &GainsDocument) -> Result<Trajectory, HarnessError> {
    let k = gains.gain(spec)?;
    if !(stability_check(&spec.model, &k) < 0.0) {
        eprintln!("warning: closed loop is not asymptotically stable");
    }
    simulate_closed_loop(&spec.model, &k, &spec.x0, spec.horizon, spec.dt).map_err(|e| HarnessError::Numerical(e.to_string()))
}
