//! Sample statistics and Welch's one-tailed t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least 2 values, got {0} and {1}")]
    TooFewSamples(usize, usize),
    #[error("samples must be finite")]
    NonFinite,
    /// Both samples constant with equal means; the one-tailed p is 0.5.
    #[error("both samples are constant with equal means")]
    DegenerateSample,
}

/// Alternative hypothesis of the one-tailed test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// mean(a) < mean(b)
    #[default]
    Less,
    /// mean(a) > mean(b)
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor `N − 1`; zero for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn sample_sd(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Student-t CDF through the regularized incomplete beta function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t));
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn welch_t_test(a: &[f64], b: &[f64], direction: Direction) -> Result<WelchResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewSamples(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        if diff == 0.0 {
            return Err(StatsError::DegenerateSample);
        }
        // constant samples with distinct means: certain ordering
        let t = diff.signum() * f64::INFINITY;
        let df = na + nb - 2.0;
        let p_less = if diff < 0.0 { 0.0 } else { 1.0 };
        let p = match direction {
            Direction::Less => p_less,
            Direction::Greater => 1.0 - p_less,
        };
        return Ok(WelchResult { t, df, p });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let cdf = student_t_cdf(t, df);
    let p = match direction {
        Direction::Less => cdf,
        Direction::Greater => 1.0 - cdf,
    };
    Ok(WelchResult { t, df, p })
}

/// Like [`welch_t_test`] but maps the degenerate case to `p = 0.5`.
pub fn welch_p(a: &[f64], b: &[f64], direction: Direction) -> Result<WelchResult, StatsError> {
    match welch_t_test(a, b, direction) {
        Err(StatsError::DegenerateSample) => Ok(WelchResult {
            t: 0.0,
            df: (a.len() + b.len()) as f64 - 2.0,
            p: 0.5,
        }),
        other => other,
    }
}
