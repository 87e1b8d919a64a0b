//! Multi-step forecasts for a fitted regression-with-ARIMA-errors model.
//!
//! Point forecasts extend the innovation recursion with future shocks set
//! to zero, then undo the differencing. Interval widths come from the
//! psi-weight (MA-infinity) representation of the integrated process:
//! var_h = sigma2 * sum_{i<h} psi_i^2.

use super::{ArimaxError, ArimaxFit};

const Z_80: f64 = 1.2815515655446004;
const Z_95: f64 = 1.959963984540054;

/// Future values for the exogenous regressor over the forecast horizon.
/// Only consulted when the fitted model includes a regressor.
#[derive(Debug, Clone)]
pub enum FutureRegressor<'a> {
    /// Hold the regressor at its in-sample mean.
    HoldAtMean,
    /// Caller-supplied path, one value per step.
    Explicit(&'a [f64]),
}

#[derive(Debug, Clone)]
pub struct ForecastResult {
    pub horizon: usize,
    pub sigma2: f64,
    pub point: Vec<f64>,
    pub lower_80: Vec<f64>,
    pub upper_80: Vec<f64>,
    pub lower_95: Vec<f64>,
    pub upper_95: Vec<f64>,
}

/// First `count` psi weights of the ARIMA(p, d, q) process
/// phi(z) (1-z)^d w_t = theta(z) eps_t written as an MA-infinity filter.
/// psi_0 = 1; psi_s = -theta_s + sum_i a_i psi_{s-i}, where
/// 1 - sum a_i z^i = phi(z) (1-z)^d.
pub fn psi_weights(phi: &[f64], theta: &[f64], d: usize, count: usize) -> Vec<f64> {
    // expand phi(z) * (1-z)^d into full coefficients c_0..c_{p+d}, c_0 = 1
    let mut c = vec![0.0; phi.len() + 1];
    c[0] = 1.0;
    for (i, ph) in phi.iter().enumerate() {
        c[i + 1] = -ph;
    }
    for _ in 0..d {
        // multiply by (1 - z)
        let mut next = vec![0.0; c.len() + 1];
        for (i, &v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v;
        }
        c = next;
    }
    let a: Vec<f64> = c[1..].iter().map(|v| -v).collect();

    let mut psi = Vec::with_capacity(count);
    for s in 0..count {
        if s == 0 {
            psi.push(1.0);
            continue;
        }
        let mut v = if s <= theta.len() { -theta[s - 1] } else { 0.0 };
        for (i, &ai) in a.iter().enumerate() {
            if s > i {
                v += ai * psi[s - 1 - i];
            }
        }
        psi.push(v);
    }
    psi
}

pub fn forecast(
    fit: &ArimaxFit,
    horizon: usize,
    future_x: FutureRegressor<'_>,
) -> Result<ForecastResult, ArimaxError> {
    if horizon == 0 {
        return Err(ArimaxError::HorizonZero);
    }
    if let FutureRegressor::Explicit(xs) = &future_x {
        if xs.len() != horizon {
            return Err(ArimaxError::FutureRegressorLength { horizon, got: xs.len() });
        }
    }

    let spec = fit.spec;
    let state = &fit.state;
    let beta = fit.beta.unwrap_or(0.0);

    // extend the w recursion with future innovations at zero
    let tail_len = state.w_tail.len();
    let eps_len = state.eps_tail.len();
    let mut w_future = Vec::with_capacity(horizon);
    for s in 1..=horizon {
        let mut v = 0.0;
        for (i, ph) in fit.phi.iter().enumerate() {
            let tau = s as i64 - (i as i64 + 1);
            let w = if tau >= 1 {
                w_future[(tau - 1) as usize]
            } else {
                // observed tail; values before the stored window are the
                // recursion's zero pre-sample
                let idx = tail_len as i64 + tau - 1;
                if idx >= 0 {
                    state.w_tail[idx as usize]
                } else {
                    0.0
                }
            };
            v += ph * w;
        }
        for (j, th) in fit.theta.iter().enumerate() {
            let tau = s as i64 - (j as i64 + 1);
            if tau <= 0 {
                let idx = eps_len as i64 + tau - 1;
                if idx >= 0 {
                    v -= th * state.eps_tail[idx as usize];
                }
            }
            // future innovations have expectation zero
        }
        w_future.push(v);
    }

    // undo the differencing step by step
    let mut levels = state.level_tails.clone();
    let mut eta = Vec::with_capacity(horizon);
    for &w in &w_future {
        if spec.d == 0 {
            eta.push(w);
        } else {
            levels[spec.d - 1] += w;
            for j in (0..spec.d - 1).rev() {
                levels[j] += levels[j + 1];
            }
            eta.push(levels[0]);
        }
    }

    // add back the regression part
    let mut point = Vec::with_capacity(horizon);
    for (s, &e) in eta.iter().enumerate() {
        let xb = if fit.beta.is_some() {
            let x = match &future_x {
                FutureRegressor::HoldAtMean => {
                    state.x_mean.ok_or(ArimaxError::MissingRegressor)?
                }
                FutureRegressor::Explicit(xs) => xs[s],
            };
            beta * x
        } else {
            0.0
        };
        point.push(e + xb);
    }

    // interval widths from the psi-weight variance ramp
    let psi = psi_weights(&fit.phi, &fit.theta, spec.d, horizon);
    let mut cum = 0.0;
    let mut lower_80 = Vec::with_capacity(horizon);
    let mut upper_80 = Vec::with_capacity(horizon);
    let mut lower_95 = Vec::with_capacity(horizon);
    let mut upper_95 = Vec::with_capacity(horizon);
    for (s, &p) in point.iter().enumerate() {
        cum += psi[s] * psi[s];
        let sd = (fit.sigma2 * cum).sqrt();
        lower_80.push(p - Z_80 * sd);
        upper_80.push(p + Z_80 * sd);
        lower_95.push(p - Z_95 * sd);
        upper_95.push(p + Z_95 * sd);
    }

    Ok(ForecastResult {
        horizon,
        sigma2: fit.sigma2,
        point,
        lower_80,
        upper_80,
        lower_95,
        upper_95,
    })
}
