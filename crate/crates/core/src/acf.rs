//! Closed-form autocorrelation evaluators and the sample ACF.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CountSeries, Inar1Params, TypeAParams, TypeBParams};

/// Autocorrelation values indexed by lag (entry 0 is always 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcfCurve {
    pub values: Vec<f64>,
}

impl AcfCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Corr(X_t, X_{t+s}) for type A: the thinning probabilities of the shared
/// latents, sum_{i=0}^{p-s} alpha_{t-i}; zero beyond lag p.
pub fn type_a_acf(params: &TypeAParams, p: usize, t: usize, s: usize) -> Result<f64> {
    if s < 1 {
        return Err(Error::domain("lag s must be >= 1"));
    }
    if t < 1 {
        return Err(Error::domain("index t must be >= 1"));
    }
    if s > p {
        return Ok(0.0);
    }
    Ok((0..=(p - s) as i64).map(|i| params.alpha_at(t as i64 - i)).sum())
}

/// Corr(X_t, X_{t+s}) for type B: alpha_t alpha_{t+s} (p+1-s)/(p+1); zero
/// beyond lag p.
pub fn type_b_acf(params: &TypeBParams, p: usize, t: usize, s: usize) -> Result<f64> {
    if s < 1 {
        return Err(Error::domain("lag s must be >= 1"));
    }
    if t < 1 {
        return Err(Error::domain("index t must be >= 1"));
    }
    if s > p {
        return Ok(0.0);
    }
    let shared = (p + 1 - s) as f64 / (p + 1) as f64;
    Ok(params.alpha_at(t as i64) * params.alpha_at((t + s) as i64) * shared)
}

/// INAR(1) autocorrelation alpha^s.
pub fn inar1_acf(params: &Inar1Params, s: usize) -> f64 {
    debug_assert!(params.alpha > 0.0 && params.alpha < 1.0);
    params.alpha.powi(s as i32)
}

/// Sample autocorrelation with global mean centering, biased (1/T)
/// covariance normalization, and lag-0 normalization.
pub fn empirical_acf(x: &CountSeries, max_lag: usize) -> Result<AcfCurve> {
    let n = x.len();
    if n <= max_lag {
        return Err(Error::domain(format!(
            "series length {n} must exceed max_lag {max_lag}"
        )));
    }
    let mean = x.x.iter().sum::<u64>() as f64 / n as f64;
    let centered: Vec<f64> = x.x.iter().map(|&v| v as f64 - mean).collect();
    let denom: f64 = centered.iter().map(|c| c * c).sum();
    if denom == 0.0 {
        return Err(Error::domain(
            "series is constant; autocorrelation is undefined",
        ));
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    for s in 0..=max_lag {
        let num: f64 = (0..n - s).map(|t| centered[t] * centered[t + s]).sum();
        values.push(num / denom);
    }
    Ok(AcfCurve { values })
}
