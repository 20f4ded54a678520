//! Time-domain regulation measures.
//!
//! Both benchmarks are initial-condition regulation problems, so overshoot,
//! rise time and settling time are measured on the decay of `|y|` relative
//! to `|y(0)|` rather than against a step reference. Responses that never
//! reach a threshold yield `+inf` instead of an error so that fitness
//! aggregation can penalize them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::Trajectory;

/// Coefficients of the landing tracking error `-w + 1.133 θ + 0.2 h`.
const FLIGHT_W: usize = 1;
const FLIGHT_THETA: usize = 3;
const FLIGHT_H: usize = 4;
const FLIGHT_STATES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("signal source {0} is not valid for a {1}-state trajectory")]
    BadSource(String, usize),
    #[error("initial deviation is zero; metric undefined for this signal")]
    ZeroInitialDeviation,
    #[error("trajectory does not come from the flight benchmark ({0} states)")]
    WrongBenchmark(usize),
    #[error("invalid metric spec: {0}")]
    InvalidSpec(String),
    #[error("empty signal")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    /// Projection onto one state.
    State(usize),
    /// `-w(t) + 1.133 θ(t) + 0.2 h(t)` on the six-state landing model.
    FlightError,
}

impl std::fmt::Display for SignalSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignalSource::State(i) => write!(f, "state[{i}]"),
            SignalSource::FlightError => write!(f, "-w + 1.133*theta + 0.2*h"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSignalSpec {
    pub source: SignalSource,
    pub settle_band: f64,
    pub rise_hi: f64,
    pub rise_lo: f64,
    pub tail_fraction: f64,
}

impl MetricSignalSpec {
    pub fn new(source: SignalSource) -> Self {
        Self {
            source,
            settle_band: 0.02,
            rise_hi: 0.9,
            rise_lo: 0.1,
            tail_fraction: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if !(0.0 < self.rise_lo && self.rise_lo < self.rise_hi && self.rise_hi <= 1.0) {
            return Err(MetricError::InvalidSpec(format!(
                "need 0 < rise_lo < rise_hi <= 1, got {} / {}",
                self.rise_lo, self.rise_hi
            )));
        }
        if !(0.0 < self.settle_band && self.settle_band < 1.0) {
            return Err(MetricError::InvalidSpec(format!(
                "settle_band {} outside (0, 1)",
                self.settle_band
            )));
        }
        if !(0.0 < self.tail_fraction && self.tail_fraction < 1.0) {
            return Err(MetricError::InvalidSpec(format!(
                "tail_fraction {} outside (0, 1)",
                self.tail_fraction
            )));
        }
        Ok(())
    }
}

/// Scalar time series extracted from a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub horizon: f64,
    /// Inherited from the trajectory; every metric of a blown-up signal is `+inf`.
    pub blown_up: bool,
}

impl Signal {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Self {
        let horizon = times.last().copied().unwrap_or(0.0);
        Self {
            times,
            values,
            horizon,
            blown_up: false,
        }
    }

    /// Samples `f` on `[0, horizon]` with step `dt`.
    pub fn sampled(f: impl Fn(f64) -> f64, horizon: f64, dt: f64) -> Self {
        let steps = (horizon / dt).round() as usize;
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    fn initial_deviation(&self) -> Result<f64, MetricError> {
        let y0 = *self.values.first().ok_or(MetricError::Empty)?;
        if y0 == 0.0 {
            return Err(MetricError::ZeroInitialDeviation);
        }
        Ok(y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseMetrics {
    pub overshoot: f64,
    pub rise_time: f64,
    pub settling_time: f64,
    pub steady_state_error: f64,
    pub iae: Option<f64>,
}

impl ResponseMetrics {
    pub fn sentinel(with_iae: bool) -> Self {
        Self {
            overshoot: f64::INFINITY,
            rise_time: f64::INFINITY,
            settling_time: f64::INFINITY,
            steady_state_error: f64::INFINITY,
            iae: with_iae.then_some(f64::INFINITY),
        }
    }
}

fn flight_error(u: &[f64]) -> f64 {
    -u[FLIGHT_W] + 1.133 * u[FLIGHT_THETA] + 0.2 * u[FLIGHT_H]
}

pub fn metric_signal(traj: &Trajectory, spec: &MetricSignalSpec) -> Result<Signal, MetricError> {
    let n = traj.n_states();
    let values = match spec.source {
        SignalSource::State(i) if i < n => traj.state_series(i),
        SignalSource::FlightError if n == FLIGHT_STATES => traj
            .states
            .column_iter()
            .map(|c| flight_error(c.as_slice()))
            .collect(),
        other => return Err(MetricError::BadSource(other.to_string(), n)),
    };
    Ok(Signal {
        times: traj.times.clone(),
        values,
        horizon: traj.horizon,
        blown_up: traj.blown_up,
    })
}

/// Largest excursion past zero on the side opposite the initial deviation.
pub fn overshoot(y: &Signal, _spec: &MetricSignalSpec) -> Result<f64, MetricError> {
    let y0 = y.initial_deviation()?;
    if y.blown_up {
        return Ok(f64::INFINITY);
    }
    let s = y0.signum();
    Ok(y.values.iter().map(|v| -s * v).fold(0.0, f64::max))
}

fn first_time_within(y: &Signal, level: f64) -> f64 {
    y.values
        .iter()
        .position(|v| v.abs() <= level)
        .map_or(f64::INFINITY, |k| y.times[k])
}

/// Time for `|y|` to fall from `rise_hi·|y(0)|` to `rise_lo·|y(0)|`.
pub fn rise_time(y: &Signal, spec: &MetricSignalSpec) -> Result<f64, MetricError> {
    let y0 = y.initial_deviation()?.abs();
    if y.blown_up {
        return Ok(f64::INFINITY);
    }
    let t_hi = first_time_within(y, spec.rise_hi * y0);
    let t_lo = first_time_within(y, spec.rise_lo * y0);
    if !t_lo.is_finite() || !t_hi.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(t_lo - t_hi)
}

/// First sample time after which `|y|` stays inside `settle_band·|y(0)|`.
pub fn settling_time(y: &Signal, spec: &MetricSignalSpec) -> Result<f64, MetricError> {
    let y0 = y.initial_deviation()?.abs();
    if y.blown_up {
        return Ok(f64::INFINITY);
    }
    let band = spec.settle_band * y0;
    match y.values.iter().rposition(|v| v.abs() > band) {
        None => Ok(0.0),
        Some(last) if last + 1 < y.values.len() => Ok(y.times[last + 1]),
        Some(_) => Ok(f64::INFINITY),
    }
}

/// Mean `|y|` over the final `tail_fraction` of the horizon.
pub fn steady_state_error(y: &Signal, spec: &MetricSignalSpec) -> Result<f64, MetricError> {
    if y.values.is_empty() {
        return Err(MetricError::Empty);
    }
    if y.blown_up {
        return Ok(f64::INFINITY);
    }
    let start = y.horizon * (1.0 - spec.tail_fraction);
    let (sum, count) = y
        .times
        .iter()
        .zip(&y.values)
        .filter(|(t, _)| **t >= start - 1e-12)
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v.abs(), c + 1));
    if count == 0 {
        return Ok(y.values.last().unwrap().abs());
    }
    Ok(sum / count as f64)
}

fn trapezoid_abs(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0].abs() + v[1].abs()) * (t[1] - t[0]))
        .sum()
}

/// Trapezoidal `∫ |-w + 1.133 θ + 0.2 h| dt` over the landing trajectory.
pub fn integrated_absolute_error(traj: &Trajectory) -> Result<f64, MetricError> {
    if traj.n_states() != FLIGHT_STATES {
        return Err(MetricError::WrongBenchmark(traj.n_states()));
    }
    if traj.blown_up {
        return Ok(f64::INFINITY);
    }
    let e: Vec<f64> = traj
        .states
        .column_iter()
        .map(|c| flight_error(c.as_slice()))
        .collect();
    Ok(trapezoid_abs(&traj.times, &e))
}

/// All measures for one trajectory. `with_iae` adds the landing IAE.
pub fn evaluate_response(
    traj: &Trajectory,
    spec: &MetricSignalSpec,
    with_iae: bool,
) -> Result<ResponseMetrics, MetricError> {
    if traj.blown_up {
        return Ok(ResponseMetrics::sentinel(with_iae));
    }
    let y = metric_signal(traj, spec)?;
    Ok(ResponseMetrics {
        overshoot: overshoot(&y, spec)?,
        rise_time: rise_time(&y, spec)?,
        settling_time: settling_time(&y, spec)?,
        steady_state_error: steady_state_error(&y, spec)?,
        iae: if with_iae {
            Some(integrated_absolute_error(traj)?)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn spec() -> MetricSignalSpec {
        MetricSignalSpec::new(SignalSource::State(0))
    }

    fn samples(values: &[f64]) -> Signal {
        Signal::new((0..values.len()).map(|k| k as f64).collect(), values.to_vec())
    }

    fn traj_from(states: DMatrix<f64>, dt: f64) -> Trajectory {
        let len = states.ncols();
        Trajectory {
            times: (0..len).map(|k| k as f64 * dt).collect(),
            inputs: DMatrix::zeros(1, len),
            states,
            dt,
            horizon: (len - 1) as f64 * dt,
            blown_up: false,
        }
    }

    #[test]
    fn projection_and_flight_signal() {
        let mut states = DMatrix::zeros(6, 3);
        states.row_mut(1).fill(1.0);
        let traj = traj_from(states, 0.5);
        let y = metric_signal(&traj, &MetricSignalSpec::new(SignalSource::FlightError)).unwrap();
        assert_eq!(y.values, vec![-1.0; 3]);
        let y = metric_signal(&traj, &MetricSignalSpec::new(SignalSource::State(1))).unwrap();
        assert_eq!(y.values, vec![1.0; 3]);

        let x0 = [5.0, -2.5, -1.0, -3.0, 15.0, 0.5];
        let traj = traj_from(DMatrix::from_column_slice(6, 1, &x0), 0.1);
        let y = metric_signal(&traj, &MetricSignalSpec::new(SignalSource::FlightError)).unwrap();
        assert_abs_diff_eq!(y.values[0], 2.101, epsilon = 1e-12);
    }

    #[test]
    fn bad_sources() {
        let traj = traj_from(DMatrix::zeros(4, 3), 0.1);
        assert!(matches!(
            metric_signal(&traj, &MetricSignalSpec::new(SignalSource::State(4))),
            Err(MetricError::BadSource(..))
        ));
        assert!(matches!(
            metric_signal(&traj, &MetricSignalSpec::new(SignalSource::FlightError)),
            Err(MetricError::BadSource(..))
        ));
        assert_eq!(integrated_absolute_error(&traj), Err(MetricError::WrongBenchmark(4)));
    }

    #[test]
    fn overshoot_cases() {
        let y = Signal::sampled(|t| 9.0 * (-t).exp(), 5.0, 0.01);
        assert_eq!(overshoot(&y, &spec()).unwrap(), 0.0);
        assert_eq!(overshoot(&samples(&[2.0, 1.0, -0.5, 0.1, 0.0]), &spec()).unwrap(), 0.5);
        assert_eq!(overshoot(&samples(&[-2.0, 0.3, -0.1]), &spec()).unwrap(), 0.3);
        assert_eq!(
            overshoot(&samples(&[0.0, 1.0]), &spec()),
            Err(MetricError::ZeroInitialDeviation)
        );
    }

    #[test]
    fn overshoot_matches_exhaustive_scan() {
        let y = Signal::sampled(|t| (-t).exp() * (4.0 * t).cos(), 6.0, 1e-4);
        let mut brute = 0.0f64;
        for v in &y.values {
            if -v > brute {
                brute = -v;
            }
        }
        assert_eq!(overshoot(&y, &spec()).unwrap(), brute);
        assert!(brute > 0.4);
    }

    #[test]
    fn rise_time_cases() {
        let dt = 1e-3;
        let y = Signal::sampled(|t| (-t).exp(), 10.0, dt);
        assert_abs_diff_eq!(rise_time(&y, &spec()).unwrap(), 9f64.ln(), epsilon = dt);
        let y = Signal::sampled(|t| (-10.0 * t).exp(), 2.0, dt);
        assert_abs_diff_eq!(rise_time(&y, &spec()).unwrap(), 9f64.ln() / 10.0, epsilon = dt);
        let y = samples(&[1.0, 0.95, 0.97, 0.99]);
        assert_eq!(rise_time(&y, &spec()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn settling_time_cases() {
        let dt = 1e-3;
        let y = Signal::sampled(|t| (-t).exp(), 10.0, dt);
        assert_abs_diff_eq!(settling_time(&y, &spec()).unwrap(), 50f64.ln(), epsilon = dt);
        let y = samples(&[1.0, 0.01, 0.05, 0.01, 0.005, 0.001]);
        assert_eq!(settling_time(&y, &spec()).unwrap(), 3.0);
        let y = samples(&[1.0, 1.0, 1.0]);
        assert_eq!(settling_time(&y, &spec()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn steady_state_error_cases() {
        let y = Signal::sampled(|t| (-t).exp(), 5.0, 1e-3);
        assert_abs_diff_eq!(steady_state_error(&y, &spec()).unwrap(), 0.0072, epsilon = 1e-3);
        let y = Signal::sampled(|_| 0.0, 5.0, 0.1);
        assert_eq!(steady_state_error(&y, &spec()).unwrap(), 0.0);
        let y = Signal::sampled(|_| 0.3, 5.0, 0.1);
        assert_abs_diff_eq!(steady_state_error(&y, &spec()).unwrap(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn iae_cases() {
        let traj = traj_from(DMatrix::zeros(6, 11), 0.1);
        assert_eq!(integrated_absolute_error(&traj).unwrap(), 0.0);
        let mut states = DMatrix::zeros(6, 101);
        states.row_mut(1).fill(1.0);
        let traj = traj_from(states, 0.01);
        assert_abs_diff_eq!(integrated_absolute_error(&traj).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn blown_up_gives_sentinels() {
        let mut traj = traj_from(DMatrix::from_element(6, 4, 1.0), 0.1);
        traj.blown_up = true;
        let m = evaluate_response(&traj, &MetricSignalSpec::new(SignalSource::FlightError), true).unwrap();
        assert_eq!(m, ResponseMetrics::sentinel(true));
        let y = metric_signal(&traj, &MetricSignalSpec::new(SignalSource::State(0))).unwrap();
        assert_eq!(overshoot(&y, &spec()).unwrap(), f64::INFINITY);
        assert_eq!(rise_time(&y, &spec()).unwrap(), f64::INFINITY);
        assert_eq!(settling_time(&y, &spec()).unwrap(), f64::INFINITY);
        assert_eq!(steady_state_error(&y, &spec()).unwrap(), f64::INFINITY);
        assert_eq!(integrated_absolute_error(&traj).unwrap(), f64::INFINITY);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        assert!(s.validate().is_ok());
        s.rise_lo = 0.95;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.settle_band = 1.0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.tail_fraction = 0.0;
        assert!(s.validate().is_err());
    }

    fn damped(a: f64, rate: f64, freq: f64) -> impl Fn(f64) -> f64 {
        move |t| a * (-rate * t).exp() * (freq * t).cos()
    }

    proptest! {
        #[test]
        fn amplitude_scaling(c in 0.1f64..10.0, rate in 0.5f64..3.0, freq in 0.0f64..5.0) {
            let base = Signal::sampled(damped(1.0, rate, freq), 8.0, 1e-3);
            let scaled = Signal::sampled(damped(c, rate, freq), 8.0, 1e-3);
            let s = spec();
            let os = overshoot(&base, &s).unwrap();
            prop_assert!((overshoot(&scaled, &s).unwrap() - c * os).abs() <= 1e-9 * c.max(1.0));
            let ess = steady_state_error(&base, &s).unwrap();
            prop_assert!((steady_state_error(&scaled, &s).unwrap() - c * ess).abs() <= 1e-9 * c.max(1.0));
            prop_assert_eq!(rise_time(&scaled, &s).unwrap(), rise_time(&base, &s).unwrap());
            prop_assert_eq!(settling_time(&scaled, &s).unwrap(), settling_time(&base, &s).unwrap());
        }

        #[test]
        fn time_scaling(c in 1usize..5, rate in 0.5f64..2.0) {
            // y(ct) sampled on a grid c times finer so both series share sample points
            let dt = 1e-3;
            let base = Signal::sampled(|t| (-rate * t).exp(), 12.0, dt);
            let fast = Signal::sampled(|t| (-rate * c as f64 * t).exp(), 12.0 / c as f64, dt / c as f64);
            let s = spec();
            let cf = c as f64;
            prop_assert!((rise_time(&fast, &s).unwrap() - rise_time(&base, &s).unwrap() / cf).abs() < 2.0 * dt);
            prop_assert!((settling_time(&fast, &s).unwrap() - settling_time(&base, &s).unwrap() / cf).abs() < 2.0 * dt);
            prop_assert_eq!(overshoot(&fast, &s).unwrap(), overshoot(&base, &s).unwrap());
        }

        #[test]
        fn monotone_decay_has_no_overshoot(a in 0.1f64..100.0, rate in 0.01f64..10.0) {
            let y = Signal::sampled(|t| a * (-rate * t).exp(), 5.0, 0.01);
            prop_assert_eq!(overshoot(&y, &spec()).unwrap(), 0.0);
        }
    }
}
