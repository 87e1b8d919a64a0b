//! Correlation, autocorrelation and hypothesis tests used by the pipeline.

mod adf;
mod linalg;
mod special;

pub use adf::{adf_test, adf_test_with_lags, dickey_fuller_critical_value};
pub(crate) use linalg::{invert, lstsq};
pub use special::{chi_square_sf, ln_gamma};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("too short: need at least {need} observations, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("constant input: statistic undefined")]
    ConstantInput,
    #[error("lag order {lag} too large for series of length {len}")]
    LagTooLarge { lag: usize, len: usize },
    #[error("invalid degrees of freedom: lags = {lags}, fitted parameters = {fit_df}")]
    InvalidDf { lags: usize, fit_df: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Common result shape for the hypothesis tests. `clamped` marks p-values
/// that hit the edge of a tabulated range; `detail` carries named
/// intermediates for reports.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TestResult {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub df_or_lags: usize,
    pub clamped: bool,
    pub detail: BTreeMap<String, f64>,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

// ==================== correlation ====================

/// Pearson correlation, clamped into [-1, 1] against rounding overshoot.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooShort { need: 3, got: x.len() });
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

// ==================== autocorrelation ====================

/// Sample autocorrelations at lags 1..=max_lag with the biased (1/n)
/// denominator convention.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>, StatsError> {
    let n = x.len();
    if max_lag == 0 {
        return Err(StatsError::InvalidParameter("max_lag must be >= 1".into()));
    }
    if max_lag >= n {
        return Err(StatsError::LagTooLarge { lag: max_lag, len: n });
    }
    let m = mean(x);
    let mut denom = 0.0;
    for &v in x {
        let d = v - m;
        denom += d * d;
    }
    if denom == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let mut out = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let mut num = 0.0;
        for t in k..n {
            num += (x[t] - m) * (x[t - k] - m);
        }
        out.push(num / denom);
    }
    Ok(out)
}

// ==================== Ljung-Box ====================

/// Ljung-Box portmanteau test: Q = n(n+2) * sum_k rho_k^2/(n-k), compared to
/// chi-square with `lags - fit_df` degrees of freedom.
pub fn ljung_box(x: &[f64], lags: usize, fit_df: usize) -> Result<TestResult, StatsError> {
    if lags <= fit_df {
        return Err(StatsError::InvalidDf { lags, fit_df });
    }
    let n = x.len();
    if lags >= n {
        return Err(StatsError::LagTooLarge { lag: lags, len: n });
    }
    let rho = acf(x, lags)?;
    let nf = n as f64;
    let mut q = 0.0;
    for (k, r) in rho.iter().enumerate() {
        let lag = (k + 1) as f64;
        q += r * r / (nf - lag);
    }
    q *= nf * (nf + 2.0);
    let df = lags - fit_df;
    let p = chi_square_sf(q, df as f64)?;
    let mut detail = BTreeMap::new();
    detail.insert("lags".to_string(), lags as f64);
    detail.insert("fit_df".to_string(), fit_df as f64);
    detail.insert("n".to_string(), nf);
    Ok(TestResult {
        name: "ljung_box".to_string(),
        statistic: q,
        p_value: p,
        df_or_lags: df,
        clamped: false,
        detail,
    })
}

// ==================== tests ====================
