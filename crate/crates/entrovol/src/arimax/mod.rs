//! Regression with ARIMA errors, fitted by conditional sum of squares.
//!
//! The model is Y_t = beta * X_t + eta_t where diff^d(eta) is ARMA(p, q).
//! All parameters (beta, phi, theta) are estimated jointly by minimizing
//! the CSS objective with Nelder-Mead from several deterministic starts,
//! followed by a polish restart from the best point. Standard errors come
//! from a numeric Hessian of the concentrated Gaussian log-likelihood.

mod css;
mod forecast;

pub use css::{css_objective, prepare_css_data, PreparedData};
pub use forecast::{forecast, psi_weights, ForecastResult, FutureRegressor};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};
use crate::series::DatedValue;
use crate::stats::{acf, invert, ljung_box, lstsq, mean, StatsError, TestResult};

#[derive(Debug, Error)]
pub enum ArimaxError {
    #[error("invalid model order: {0}")]
    InvalidOrder(String),
    #[error("length mismatch: y has {y} points, x has {x}")]
    LengthMismatch { y: usize, x: usize },
    #[error("series too short: need at least {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("model includes a regressor but none was provided")]
    MissingRegressor,
    #[error("optimizer did not converge within the iteration budget")]
    NonConvergence,
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("forecast horizon must be positive")]
    HorizonZero,
    #[error("future regressor has {got} values, horizon is {horizon}")]
    FutureRegressorLength { horizon: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

// ==================== model order ====================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArimaxSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_regressor: bool,
}

impl ArimaxSpec {
    pub fn new(
        p: usize,
        d: usize,
        q: usize,
        include_regressor: bool,
    ) -> Result<Self, ArimaxError> {
        if d > 2 {
            return Err(ArimaxError::InvalidOrder(format!("d = {d} (max 2)")));
        }
        if p > 12 || q > 12 {
            return Err(ArimaxError::InvalidOrder(format!("p = {p}, q = {q} (max 12 each)")));
        }
        Ok(Self { p, d, q, include_regressor })
    }

    /// Free mean/ARMA parameters (beta + phi + theta), excluding sigma2.
    pub fn param_count(&self) -> usize {
        usize::from(self.include_regressor) + self.p + self.q
    }
}

#[derive(Clone, Copy)]
struct ParamLayout {
    regressor: bool,
    p: usize,
    q: usize,
}

impl ParamLayout {
    fn from_spec(spec: ArimaxSpec) -> Self {
        Self { regressor: spec.include_regressor, p: spec.p, q: spec.q }
    }

    fn dim(&self) -> usize {
        usize::from(self.regressor) + self.p + self.q
    }

    fn unpack<'a>(&self, params: &'a [f64]) -> (Option<f64>, &'a [f64], &'a [f64]) {
        let off = usize::from(self.regressor);
        let beta = if self.regressor { Some(params[0]) } else { None };
        (beta, &params[off..off + self.p], &params[off + self.p..off + self.p + self.q])
    }
}

// ==================== fit result ====================

/// Carry-over state needed to extend the fitted recursion past the sample.
#[derive(Debug, Clone)]
pub(crate) struct FitState {
    /// Last p values of w (chronological).
    pub(crate) w_tail: Vec<f64>,
    /// Last q innovations (chronological).
    pub(crate) eps_tail: Vec<f64>,
    /// Last value of diff^j(eta) for j = 0..d, used to undo differencing.
    pub(crate) level_tails: Vec<f64>,
    /// Mean of the in-sample regressor, when one is present.
    pub(crate) x_mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ArimaxFit {
    pub spec: ArimaxSpec,
    pub beta: Option<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Standard errors from the inverse objective curvature; NaN when the
    /// numeric Hessian is not positive definite (exact fits, root
    /// cancellation in an over-specified order).
    pub beta_se: Option<f64>,
    pub phi_se: Vec<f64>,
    pub theta_se: Vec<f64>,
    /// Innovation variance, css / n_effective.
    pub sigma2: f64,
    /// Unpenalized conditional sum of squares at the optimum.
    pub css: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub aicc: f64,
    pub bic: f64,
    /// Number of innovations entering the objective (len(y) - d).
    pub n_effective: usize,
    pub converged: bool,
    /// In-sample innovations, dated from index d onward.
    pub residuals: Vec<DatedValue>,
    pub(crate) state: FitState,
}

impl ArimaxFit {
    /// Degrees of freedom absorbed by the ARMA filter (p + q); the
    /// regressor does not whiten the residuals and is not counted.
    pub fn fit_df(&self) -> usize {
        self.spec.p + self.spec.q
    }
}

// ==================== fitting ====================

const SE_STEP_SCALES: [f64; 3] = [1.0, 10.0, 100.0];

pub fn fit_regression_arima_errors(
    y: &[DatedValue],
    x: Option<&[f64]>,
    spec: ArimaxSpec,
    seed: u64,
) -> Result<ArimaxFit, ArimaxError> {
    fit_with_starts(y, x, spec, seed, 5)
}

fn fit_with_starts(
    y: &[DatedValue],
    x: Option<&[f64]>,
    spec: ArimaxSpec,
    seed: u64,
    n_starts: usize,
) -> Result<ArimaxFit, ArimaxError> {
    if spec.include_regressor && x.is_none() {
        return Err(ArimaxError::MissingRegressor);
    }
    let x = if spec.include_regressor { x } else { None };
    let y_vals: Vec<f64> = y.iter().map(|p| p.value).collect();
    let data = prepare_css_data(&y_vals, x, spec.d)?;
    let layout = ParamLayout::from_spec(spec);
    let dim = layout.dim();
    let n_eff = data.len();
    if n_eff < dim + 2 {
        return Err(ArimaxError::TooShort { need: spec.d + dim + 2, got: y.len() });
    }

    let opts = NelderMeadOptions {
        max_iter: 5_000 + 1_000 * dim,
        f_tol: 1e-10,
        x_tol: 1e-7,
        init_step: 0.1,
    };

    let mut wbuf = Vec::new();
    let mut ebuf = Vec::new();

    let best = if dim == 0 {
        NelderMeadResult { x: vec![], fx: 0.0, iterations: 0, evals: 0, converged: true }
    } else {
        let starts = build_starts(&data, layout, seed, n_starts);
        let mut best: Option<NelderMeadResult> = None;
        for start in &starts {
            let res = nelder_mead(
                |params| {
                    let (beta, phi, theta) = layout.unpack(params);
                    css::css_objective_buffered(&data, beta, phi, theta, &mut wbuf, &mut ebuf)
                },
                start,
                &opts,
            );
            if best.as_ref().map_or(true, |b| res.fx < b.fx) {
                best = Some(res);
            }
        }
        let best = best.expect("at least one start");
        // polish restart: a fresh simplex around the incumbent optimum
        let polish = nelder_mead(
            |params| {
                let (beta, phi, theta) = layout.unpack(params);
                css::css_objective_buffered(&data, beta, phi, theta, &mut wbuf, &mut ebuf)
            },
            &best.x,
            &opts,
        );
        if polish.fx <= best.fx {
            polish
        } else {
            best
        }
    };
    if !best.converged {
        return Err(ArimaxError::NonConvergence);
    }

    let (beta, phi, theta) = layout.unpack(&best.x);
    let phi = phi.to_vec();
    let theta = theta.to_vec();
    let css_val = css::raw_css_buffered(&data, beta, &phi, &theta, &mut wbuf, &mut ebuf);
    if !css_val.is_finite() {
        return Err(ArimaxError::SingularFit("non-finite sum of squares at optimum".into()));
    }

    let nf = n_eff as f64;
    let sigma2 = (css_val / nf).max(f64::MIN_POSITIVE);
    let log_likelihood = -0.5 * nf * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let k = (dim + 1) as f64; // + sigma2
    let aic = -2.0 * log_likelihood + 2.0 * k;
    let aicc = if nf > k + 1.0 {
        aic + 2.0 * k * (k + 1.0) / (nf - k - 1.0)
    } else {
        f64::INFINITY
    };
    let bic = -2.0 * log_likelihood + k * nf.ln();

    let (beta_se, phi_se, theta_se) = if dim == 0 {
        (None, vec![], vec![])
    } else {
        // exact fits and near-cancelling AR/MA roots leave the curvature
        // non-invertible; keep the fit and report the errors as NaN
        let ses = standard_errors(&data, layout, &best.x, nf)
            .unwrap_or_else(|| vec![f64::NAN; dim]);
        let (b, ph, th) = layout.unpack(&ses);
        (b, ph.to_vec(), th.to_vec())
    };

    let residuals: Vec<DatedValue> = ebuf
        .iter()
        .enumerate()
        .map(|(t, &value)| DatedValue { date: y[t + spec.d].date, value })
        .collect();

    // recursion tails for forecasting
    let w_tail = wbuf[wbuf.len() - spec.p.min(wbuf.len())..].to_vec();
    let eps_tail = ebuf[ebuf.len() - spec.q.min(ebuf.len())..].to_vec();
    let b = beta.unwrap_or(0.0);
    let mut level = match x {
        Some(xs) => y_vals.iter().zip(xs).map(|(yv, xv)| yv - b * xv).collect::<Vec<f64>>(),
        None => y_vals.clone(),
    };
    let mut level_tails = Vec::with_capacity(spec.d);
    for _ in 0..spec.d {
        level_tails.push(*level.last().expect("nonempty level series"));
        level = css::difference(&level, 1);
    }
    let state =
        FitState { w_tail, eps_tail, level_tails, x_mean: x.map(mean) };

    Ok(ArimaxFit {
        spec,
        beta,
        phi,
        theta,
        beta_se,
        phi_se,
        theta_se,
        sigma2,
        css: css_val,
        log_likelihood,
        aic,
        aicc,
        bic,
        n_effective: n_eff,
        converged: best.converged,
        residuals,
        state,
    })
}

fn build_starts(
    data: &PreparedData,
    layout: ParamLayout,
    seed: u64,
    n_starts: usize,
) -> Vec<Vec<f64>> {
    let dim = layout.dim();
    let mut starts = vec![vec![0.0; dim]];
    if n_starts <= 1 {
        return starts;
    }
    let seeded = seed_start(data, layout);
    starts.push(seeded.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while starts.len() < n_starts {
        let mut s = seeded.clone();
        for (idx, v) in s.iter_mut().enumerate() {
            let u: f64 = rng.gen_range(-1.0..1.0);
            if layout.regressor && idx == 0 {
                *v += u * (0.5 * v.abs()).max(1e-3);
            } else {
                *v += u * 0.15;
            }
        }
        starts.push(s);
    }
    starts
}

/// Moment-style warm start: no-intercept OLS for beta, then
/// Hannan-Rissanen (long-AR residual regression) for phi and theta.
fn seed_start(data: &PreparedData, layout: ParamLayout) -> Vec<f64> {
    let mut out = Vec::with_capacity(layout.dim());
    let beta = if layout.regressor {
        let dx = data.dx.as_ref().expect("regressor present");
        let sxx: f64 = dx.iter().map(|v| v * v).sum();
        let sxy: f64 = dx.iter().zip(&data.dy).map(|(a, b)| a * b).sum();
        let b = if sxx > 1e-12 { sxy / sxx } else { 0.0 };
        out.push(if b.is_finite() { b } else { 0.0 });
        out[0]
    } else {
        0.0
    };
    let z: Vec<f64> = match &data.dx {
        Some(dx) => data.dy.iter().zip(dx).map(|(yv, xv)| yv - beta * xv).collect(),
        None => data.dy.clone(),
    };
    let (phi, theta) = hannan_rissanen(&z, layout.p, layout.q)
        .unwrap_or_else(|| (vec![0.0; layout.p], vec![0.0; layout.q]));
    out.extend(phi);
    out.extend(theta);
    out
}

fn hannan_rissanen(z: &[f64], p: usize, q: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if p == 0 && q == 0 {
        return Some((vec![], vec![]));
    }
    let n = z.len();
    if q == 0 {
        if n < 2 * p + 4 {
            return None;
        }
        let mut design = Vec::with_capacity(n - p);
        let mut target = Vec::with_capacity(n - p);
        for t in p..n {
            design.push((1..=p).map(|i| z[t - i]).collect::<Vec<f64>>());
            target.push(z[t]);
        }
        let fit = lstsq(&design, &target)?;
        return Some((clamp_seed(fit.coefficients), vec![]));
    }
    let h = (p.max(q) + 5).min(n / 4);
    if h == 0 {
        return None;
    }
    let t0 = (h + q).max(p);
    if n < t0 + p + q + 3 {
        return None;
    }
    let mut design = Vec::with_capacity(n - h);
    let mut target = Vec::with_capacity(n - h);
    for t in h..n {
        design.push((1..=h).map(|i| z[t - i]).collect::<Vec<f64>>());
        target.push(z[t]);
    }
    let long_ar = lstsq(&design, &target)?;
    let mut ehat = vec![0.0; n];
    for t in h..n {
        let mut pred = 0.0;
        for i in 1..=h {
            pred += long_ar.coefficients[i - 1] * z[t - i];
        }
        ehat[t] = z[t] - pred;
    }
    let mut design2 = Vec::with_capacity(n - t0);
    let mut target2 = Vec::with_capacity(n - t0);
    for t in t0..n {
        let mut row = Vec::with_capacity(p + q);
        for i in 1..=p {
            row.push(z[t - i]);
        }
        for j in 1..=q {
            row.push(ehat[t - j]);
        }
        design2.push(row);
        target2.push(z[t]);
    }
    let second = lstsq(&design2, &target2)?;
    let phi = clamp_seed(second.coefficients[..p].to_vec());
    // the regression estimates the coefficient on eps_{t-j}, which is
    // -theta_j under the 1 - sum theta_j z^j convention
    let theta = clamp_seed(second.coefficients[p..].iter().map(|c| -c).collect());
    Some((phi, theta))
}

fn clamp_seed(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|c| if c.is_finite() { c.clamp(-1.5, 1.5) } else { 0.0 }).collect()
}

/// Standard errors from the numeric Hessian of the concentrated negative
/// log-likelihood 0.5 * n * ln(css/n). Retries with larger finite-difference
/// steps before giving up.
fn standard_errors(
    data: &PreparedData,
    layout: ParamLayout,
    params: &[f64],
    n_eff: f64,
) -> Option<Vec<f64>> {
    let mut wbuf = Vec::new();
    let mut ebuf = Vec::new();
    let mut nll = |p: &[f64]| -> f64 {
        let (beta, phi, theta) = layout.unpack(p);
        let css = css::raw_css_buffered(data, beta, phi, theta, &mut wbuf, &mut ebuf);
        if !css.is_finite() || css <= 0.0 {
            return 1e12;
        }
        0.5 * n_eff * (css / n_eff).ln()
    };
    for scale in SE_STEP_SCALES {
        let hess = numeric_hessian(&mut nll, params, scale);
        let Some(cov) = invert(&hess) else { continue };
        let diag: Vec<f64> = (0..params.len()).map(|i| cov[i][i]).collect();
        if diag.iter().all(|&v| v.is_finite() && v > 0.0) {
            return Some(diag.into_iter().map(f64::sqrt).collect());
        }
    }
    None
}

fn numeric_hessian<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let k = x.len();
    let h: Vec<f64> = x.iter().map(|v| (v.abs() * 1e-4).max(1e-5) * scale).collect();
    let f0 = f(x);
    let mut hess = vec![vec![0.0; k]; k];
    let mut xp = x.to_vec();
    for i in 0..k {
        xp.copy_from_slice(x);
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..k {
            xp.copy_from_slice(x);
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[j] = x[j] - h[j];
            let fmm = f(&xp);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

// ==================== order selection ====================

/// Grid search over (p, d, q) minimizing AICc. The scan uses cheap
/// two-start fits; the winner is refitted with the full start set. Ties
/// keep the earliest candidate in (d, p, q) iteration order.
pub fn select_order(
    y: &[DatedValue],
    x: Option<&[f64]>,
    include_regressor: bool,
    max_p: usize,
    max_d: usize,
    max_q: usize,
    seed: u64,
) -> Result<ArimaxFit, ArimaxError> {
    let mut best: Option<(f64, ArimaxSpec)> = None;
    for d in 0..=max_d {
        for p in 0..=max_p {
            for q in 0..=max_q {
                let Ok(spec) = ArimaxSpec::new(p, d, q, include_regressor) else { continue };
                let Ok(fit) = fit_with_starts(y, x, spec, seed, 2) else { continue };
                if best.as_ref().map_or(true, |(a, _)| fit.aicc < *a) {
                    best = Some((fit.aicc, spec));
                }
            }
        }
    }
    let (_, spec) = best.ok_or(ArimaxError::NonConvergence)?;
    fit_regression_arima_errors(y, x, spec, seed)
}

// ==================== residual diagnostics ====================

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    pub ljung_box: TestResult,
    /// Degrees of freedom absorbed by the fit (p + q).
    pub fit_df: usize,
    /// Residual autocorrelations, lags 1..=max(lags, 30).
    pub acf: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
}

/// Ljung-Box on the fitted innovations (df = lags - p - q), residual ACF,
/// and a Freedman-Diaconis histogram.
pub fn residual_diagnostics(
    fit: &ArimaxFit,
    lags: usize,
) -> Result<DiagnosticReport, ArimaxError> {
    let vals: Vec<f64> = fit.residuals.iter().map(|d| d.value).collect();
    let fit_df = fit.fit_df();
    let lb = ljung_box(&vals, lags, fit_df)?;
    let max_lag = lags.max(30).min(vals.len().saturating_sub(1));
    let acf_vals = acf(&vals, max_lag)?;
    Ok(DiagnosticReport {
        ljung_box: lb,
        fit_df,
        acf: acf_vals,
        histogram: freedman_diaconis_histogram(&vals),
    })
}

fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Histogram with Freedman-Diaconis bin width 2*IQR/n^(1/3), falling back
/// to Sturges when the IQR is zero and to a single unit-wide bin when the
/// data are constant. Bin count is capped at 400.
fn freedman_diaconis_histogram(values: &[f64]) -> Vec<HistogramBin> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite residuals"));
    let (min, max) = (sorted[0], sorted[n - 1]);
    if n < 2 || min == max {
        return vec![HistogramBin { lo: min - 0.5, hi: max + 0.5, count: n }];
    }
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut width = 2.0 * iqr / (n as f64).cbrt();
    if !(width > 0.0) {
        let sturges = ((n as f64).log2().ceil() as usize + 1).max(1);
        width = (max - min) / sturges as f64;
    }
    let bins = (((max - min) / width).ceil() as usize).clamp(1, 400);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in values {
        let idx = (((x - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| HistogramBin {
            lo: min + i as f64 * width,
            hi: min + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

// ==================== tests ====================
