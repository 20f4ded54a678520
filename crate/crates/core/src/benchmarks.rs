//! Built-in plants and the loader for user-defined ones.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlError, ModelDocument, StateSpaceModel};
use crate::metrics::{MetricSignalSpec, SignalSource};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] ControlError),
    #[error("invalid benchmark: {0}")]
    Invalid(String),
}

/// Which measure fills the last objective slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    /// Steady-state error.
    Ess,
    /// Integrated absolute error of the landing tracking signal.
    Iae,
}

impl TailKind {
    pub fn label(self) -> &'static str {
        match self {
            TailKind::Ess => "Ess",
            TailKind::Iae => "IAE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub name: String,
    pub model: StateSpaceModel,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub metric_spec: MetricSignalSpec,
    pub tail_kind: TailKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    Uncontrollable { rank: usize, n: usize },
}

impl std::fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadWarning::Uncontrollable { rank, n } => {
                write!(f, "(A, B) is not controllable (rank {rank} of {n})")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedBenchmark {
    pub spec: BenchmarkSpec,
    pub warnings: Vec<LoadWarning>,
}

/// On-disk form: the model keys plus simulation and metric settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkDocument {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub model: ModelDocument,
    pub x0: Vec<f64>,
    pub horizon_s: f64,
    pub dt_s: f64,
    pub metric_source: SignalSource,
    pub tail_kind: TailKind,
    #[serde(default)]
    pub settle_band: Option<f64>,
    #[serde(default)]
    pub rise_hi: Option<f64>,
    #[serde(default)]
    pub rise_lo: Option<f64>,
    #[serde(default)]
    pub tail_fraction: Option<f64>,
}

impl BenchmarkSpec {
    pub fn n_states(&self) -> usize {
        self.model.n_states()
    }

    pub fn n_inputs(&self) -> usize {
        self.model.n_inputs()
    }

    /// Length of a candidate weight vector, `n + m`.
    pub fn dimension(&self) -> usize {
        self.n_states() + self.n_inputs()
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if self.x0.len() != self.n_states() {
            return Err(BenchmarkError::DimensionMismatch(format!(
                "x0 has {} entries, model has n={}",
                self.x0.len(),
                self.n_states()
            )));
        }
        if !(self.dt > 0.0 && self.horizon >= self.dt) {
            return Err(BenchmarkError::Invalid(format!(
                "need 0 < dt <= horizon, got dt={} horizon={}",
                self.dt, self.horizon
            )));
        }
        self.metric_spec
            .validate()
            .map_err(|e| BenchmarkError::Invalid(e.to_string()))?;
        match self.metric_spec.source {
            SignalSource::State(i) if i >= self.n_states() => {
                return Err(BenchmarkError::DimensionMismatch(format!(
                    "metric source state {i} out of range"
                )))
            }
            SignalSource::FlightError if self.n_states() != 6 => {
                return Err(BenchmarkError::DimensionMismatch(
                    "flight error signal needs the six-state landing model".into(),
                ))
            }
            _ => {}
        }
        if self.tail_kind == TailKind::Iae && self.n_states() != 6 {
            return Err(BenchmarkError::DimensionMismatch(
                "IAE tail needs the six-state landing model".into(),
            ));
        }
        Ok(())
    }

    pub fn to_document(&self) -> BenchmarkDocument {
        BenchmarkDocument {
            name: Some(self.name.clone()),
            model: self.model.clone().into(),
            x0: self.x0.clone(),
            horizon_s: self.horizon,
            dt_s: self.dt,
            metric_source: self.metric_spec.source,
            tail_kind: self.tail_kind,
            settle_band: Some(self.metric_spec.settle_band),
            rise_hi: Some(self.metric_spec.rise_hi),
            rise_lo: Some(self.metric_spec.rise_lo),
            tail_fraction: Some(self.metric_spec.tail_fraction),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("benchmark document serializes")
    }
}

/// Linearized cart-pole: states `[x, v, θ, ω]`, input force `u`.
pub fn pendulum_model() -> BenchmarkSpec {
    const CART_MASS: f64 = 0.5;
    const BOB_MASS: f64 = 0.2;
    const LENGTH: f64 = 0.6;
    const GRAVITY: f64 = 9.81;

    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, -BOB_MASS * GRAVITY / CART_MASS, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, GRAVITY * (BOB_MASS + CART_MASS) / (LENGTH * CART_MASS), 0.0,
    ]);
    let b = DMatrix::from_row_slice(4, 1, &[0.0, 1.0 / CART_MASS, 0.0, -1.0 / (LENGTH * CART_MASS)]);
    let model = StateSpaceModel::full_state(a, b)
        .and_then(|m| {
            m.with_names(
                vec!["x".into(), "v".into(), "theta".into(), "omega".into()],
                vec!["u".into()],
            )
        })
        .expect("pendulum model is well formed");
    BenchmarkSpec {
        name: "pendulum".into(),
        model,
        x0: vec![0.0, 0.0, 0.0, 9.0],
        horizon: 5.0,
        dt: 0.005,
        metric_spec: MetricSignalSpec::new(SignalSource::State(3)),
        tail_kind: TailKind::Ess,
    }
}

/// Aircraft landing flare: states `[u, w, q, θ, h, e]`, inputs
/// `[elevator, throttle, spoiler]`.
pub fn flight_model() -> BenchmarkSpec {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(6, 6, &[
        -0.058,  0.065, 0.0,   -0.171, 0.0, 1.0,
        -0.303, -0.685, 1.109,  0.0,   0.0, 0.0,
         0.072, -0.685, 0.947,  0.0,   0.0, 0.0,
         0.0,    0.0,   1.0,    0.0,   0.0, 0.0,
         0.0,   -1.0,   0.0,    1.133, 0.0, 0.0,
         0.0,    0.0,   0.0,    0.0,   0.0, -0.571,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(6, 3, &[
         0.0,   0.0,   -0.119,
        -0.054, 0.0,    0.074,
        -1.117, 0.0,    0.115,
         0.0,   0.0,    0.0,
         0.0,   0.0,    0.0,
         0.0,   0.571,  0.0,
    ]);
    let model = StateSpaceModel::full_state(a, b)
        .and_then(|m| {
            m.with_names(
                ["u", "w", "q", "theta", "h", "e"].map(String::from).to_vec(),
                ["elevator", "throttle", "spoiler"].map(String::from).to_vec(),
            )
        })
        .expect("flight model is well formed");
    BenchmarkSpec {
        name: "flight".into(),
        model,
        x0: vec![5.0, -2.5, -1.0, -3.0, 15.0, 0.5],
        horizon: 30.0,
        dt: 0.01,
        metric_spec: MetricSignalSpec::new(SignalSource::FlightError),
        tail_kind: TailKind::Iae,
    }
}

pub fn builtin(name: &str) -> Option<BenchmarkSpec> {
    match name {
        "pendulum" => Some(pendulum_model()),
        "flight" => Some(flight_model()),
        _ => None,
    }
}

pub fn load_model(document: &str) -> Result<LoadedBenchmark, BenchmarkError> {
    let doc: BenchmarkDocument = serde_json::from_str(document)?;
    let model = StateSpaceModel::try_from(doc.model).map_err(|e| match e {
        ControlError::DimensionMismatch(msg) => BenchmarkError::DimensionMismatch(msg),
        other => BenchmarkError::Model(other),
    })?;
    let mut metric_spec = MetricSignalSpec::new(doc.metric_source);
    if let Some(v) = doc.settle_band {
        metric_spec.settle_band = v;
    }
    if let Some(v) = doc.rise_hi {
        metric_spec.rise_hi = v;
    }
    if let Some(v) = doc.rise_lo {
        metric_spec.rise_lo = v;
    }
    if let Some(v) = doc.tail_fraction {
        metric_spec.tail_fraction = v;
    }
    let spec = BenchmarkSpec {
        name: doc.name.unwrap_or_else(|| "custom".into()),
        model,
        x0: doc.x0,
        horizon: doc.horizon_s,
        dt: doc.dt_s,
        metric_spec,
        tail_kind: doc.tail_kind,
    };
    spec.validate()?;
    let mut warnings = Vec::new();
    let rank = spec.model.controllability_rank();
    if rank < spec.n_states() {
        warnings.push(LoadWarning::Uncontrollable {
            rank,
            n: spec.n_states(),
        });
    }
    Ok(LoadedBenchmark { spec, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::spectral_abscissa;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pendulum_entries() {
        let p = pendulum_model();
        let a = p.model.a();
        assert_abs_diff_eq!(a[(1, 2)], -3.924, epsilon = 1e-12);
        assert_abs_diff_eq!(a[(3, 2)], 22.89, epsilon = 1e-12);
        let b: Vec<f64> = p.model.b().iter().copied().collect();
        assert_abs_diff_eq!(b[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[3], -10.0 / 3.0, epsilon = 1e-12);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[2], 0.0);
        assert_eq!(p.x0, vec![0.0, 0.0, 0.0, 9.0]);
        assert!(spectral_abscissa(a) > 0.0);
    }

    #[test]
    fn flight_entries() {
        let f = flight_model();
        assert_eq!(f.model.a()[(0, 0)], -0.058);
        assert_eq!(f.model.a()[(5, 5)], -0.571);
        assert_eq!(f.model.b()[(2, 0)], -1.117);
        assert_eq!(f.x0[4], 15.0);
        assert_eq!(f.tail_kind, TailKind::Iae);
    }

    #[test]
    fn builtins_are_controllable_and_constant() {
        for spec in [pendulum_model(), flight_model()] {
            assert!(spec.model.is_controllable(), "{}", spec.name);
            assert!(spec.validate().is_ok());
        }
        assert_eq!(pendulum_model(), pendulum_model());
        assert_eq!(flight_model(), flight_model());
    }

    #[test]
    fn pendulum_round_trips() {
        let p = pendulum_model();
        let loaded = load_model(&p.to_json()).unwrap();
        assert_eq!(loaded.spec, p);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn x0_dimension_mismatch() {
        let doc = r#"{
            "A": [[0,1,0,0],[0,0,1,0],[0,0,0,1],[0,0,0,0]],
            "B": [[0],[0],[0],[1]],
            "x0": [1, 0, 0],
            "horizon_s": 5, "dt_s": 0.01,
            "metric_source": {"state": 0}, "tail_kind": "ess"
        }"#;
        assert!(matches!(load_model(doc), Err(BenchmarkError::DimensionMismatch(_))));
    }

    #[test]
    fn zero_plant_warns_uncontrollable() {
        let doc = r#"{
            "A": [[0,0],[0,0]], "B": [[0],[0]],
            "x0": [1, 0], "horizon_s": 1, "dt_s": 0.1,
            "metric_source": {"state": 0}, "tail_kind": "ess"
        }"#;
        let loaded = load_model(doc).unwrap();
        assert_eq!(loaded.warnings, vec![LoadWarning::Uncontrollable { rank: 0, n: 2 }]);
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(load_model("{\"A\": 3}"), Err(BenchmarkError::Schema(_))));
    }
}
