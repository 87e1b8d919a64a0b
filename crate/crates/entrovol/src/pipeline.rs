//! Stage orchestration: ingest -> rolling -> diagnose -> arimax -> ml,
//! each stage reading the previous stage's artifacts from the output
//! directory and writing its own. `cmd_all` chains them fail-fast and
//! finishes with a manifest of everything produced.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::time::Instant;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::arimax::{
    fit_regression_arima_errors, forecast, residual_diagnostics, select_order, ArimaxError,
    ArimaxFit, ArimaxSpec, DiagnosticReport, ForecastResult, FutureRegressor,
};
use crate::entropy::{rolling_sample_entropy, EntropyError, SampEnParams, ToleranceRule};
use crate::ingest::{
    clean_series, format_value, parse_fred_csv, write_series_csv, IngestError, PriceSeries,
};
use crate::ml::{
    run_comparison, ComparisonConfig, ComparisonReport, Metrics, MlError, SupervisedSet,
    SvrParams,
};
use crate::plot::{
    line_chart, residual_panel, Band, ChartConfig, LineSeries, COLOR_BAND_NARROW,
    COLOR_BAND_WIDE, COLOR_PRIMARY, COLOR_SECONDARY,
};
use crate::report::{
    atomic_write, manifest_for, write_json, ManifestEntry, ReportError,
};
use crate::series::{
    log_returns, parse_rolling_csv, rolling_std, write_rolling_csv, DatedValue, RollingConfig,
    RollingPoint, RollingSeries, SeriesError,
};
use crate::stats::{adf_test, ljung_box, pearson, StatsError, TestResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const PRICES_CLEAN: &str = "prices_clean.csv";
pub const CLEANING_REPORT: &str = "cleaning_report.json";
pub const RETURNS: &str = "returns.csv";
pub const TS_STD: &str = "ts_std.csv";
pub const TS_SAMPEN: &str = "ts_sampen.csv";
pub const FIG_TS_STD: &str = "fig_ts_std.svg";
pub const FIG_TS_SAMPEN: &str = "fig_ts_sampen.svg";
pub const ROLLING_REPORT: &str = "rolling_report.json";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const ARIMAX_REPORT: &str = "arimax.json";
pub const FORECAST: &str = "forecast.csv";
pub const FIG_RESIDUALS: &str = "fig_residual_diagnostics.svg";
pub const FIG_FORECAST: &str = "fig_forecast.svg";
pub const ML_REPORT: &str = "ml_report.json";
pub const ML_PRED_OLS: &str = "ml_pred_ols.csv";
pub const ML_PRED_SVR: &str = "ml_pred_svr.csv";
pub const ML_PRED_KNN: &str = "ml_pred_knn.csv";
pub const FIG_ML_OLS: &str = "fig_ml_ols.svg";
pub const FIG_ML_SVR: &str = "fig_ml_svr.svg";
pub const FIG_ML_KNN: &str = "fig_ml_knn.svg";
pub const RUN_REPORT: &str = "run_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("series: {0}")]
    Series(#[from] SeriesError),
    #[error("entropy: {0}")]
    Entropy(#[from] EntropyError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("arima fit: {0}")]
    Arimax(#[from] ArimaxError),
    #[error("ml: {0}")]
    Ml(#[from] MlError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("cannot read {path}: {source}")]
    ReadFailed { path: String, source: io::Error },
    #[error("missing artifact {0:?}; run the earlier stages first")]
    MissingArtifact(String),
    #[error("{0} and {1} share no jointly defined dates")]
    EmptyIntersection(&'static str, &'static str),
}

// ==================== configuration ====================

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RMode {
    Abs,
    Rel,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub width: usize,
    pub step: usize,
    pub m: usize,
    pub r_mode: RMode,
    pub r: f64,
    pub order: (usize, usize, usize),
    pub auto_order: bool,
    pub horizon: usize,
    pub ratio: f64,
    pub svr_c: f64,
    pub svr_epsilon: f64,
    pub svr_gamma: f64,
    pub knn_k: usize,
    pub seed: u64,
}

impl PipelineConfig {
    /// Defaults for everything except the file locations.
    pub fn new(input: PathBuf, out_dir: PathBuf) -> Self {
        Self {
            input,
            out_dir,
            width: 252,
            step: 1,
            m: 2,
            r_mode: RMode::Rel,
            r: 0.2,
            order: (4, 1, 3),
            auto_order: false,
            horizon: 300,
            ratio: 0.8,
            svr_c: 1.0,
            svr_epsilon: 0.1,
            svr_gamma: 1.0,
            knn_k: 5,
            seed: 2023,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutput {
    pub name: String,
    pub millis: u64,
    pub files: Vec<String>,
}

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    payload: T,
}

// ==================== shared loaders ====================

fn read_artifact(cfg: &PipelineConfig, name: &str) -> Result<String, PipelineError> {
    let path = cfg.out_dir.join(name);
    fs::read_to_string(&path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            PipelineError::MissingArtifact(name.to_string())
        } else {
            PipelineError::ReadFailed { path: path.display().to_string(), source: e }
        }
    })
}

fn load_prices(cfg: &PipelineConfig) -> Result<PriceSeries, PipelineError> {
    let text = read_artifact(cfg, PRICES_CLEAN)?;
    let parsed = parse_fred_csv(&text)?;
    let (series, _) = clean_series(&parsed.rows, &parsed.series_id)?;
    Ok(series)
}

fn load_rolling(cfg: &PipelineConfig, name: &str) -> Result<Vec<RollingPoint>, PipelineError> {
    let text = read_artifact(cfg, name)?;
    Ok(parse_rolling_csv(&text)?)
}

/// Align two rolling series on the dates where both are defined.
fn defined_intersection(
    a: &[RollingPoint],
    b: &[RollingPoint],
    a_name: &'static str,
    b_name: &'static str,
) -> Result<(Vec<NaiveDate>, Vec<f64>, Vec<f64>), PipelineError> {
    let b_map: BTreeMap<NaiveDate, f64> =
        b.iter().filter_map(|p| p.value.map(|v| (p.date, v))).collect();
    let mut dates = Vec::new();
    let mut a_vals = Vec::new();
    let mut b_vals = Vec::new();
    for p in a {
        if let Some(v) = p.value {
            if let Some(&w) = b_map.get(&p.date) {
                dates.push(p.date);
                a_vals.push(v);
                b_vals.push(w);
            }
        }
    }
    if dates.is_empty() {
        return Err(PipelineError::EmptyIntersection(a_name, b_name));
    }
    Ok((dates, a_vals, b_vals))
}

/// std values aligned with sample-entropy values on jointly defined dates.
fn load_joint_series(
    cfg: &PipelineConfig,
) -> Result<(Vec<NaiveDate>, Vec<f64>, Vec<f64>), PipelineError> {
    let std_points = load_rolling(cfg, TS_STD)?;
    let sampen_points = load_rolling(cfg, TS_SAMPEN)?;
    defined_intersection(&std_points, &sampen_points, TS_STD, TS_SAMPEN)
}

// ==================== figures ====================

fn date_ticks(dates: &[NaiveDate], x_of: impl Fn(usize) -> f64) -> Vec<(f64, String)> {
    if dates.is_empty() {
        return vec![];
    }
    let n = dates.len();
    let mut ticks: Vec<(f64, String)> = Vec::new();
    for i in 0..6 {
        let idx = i * (n - 1) / 5;
        let x = x_of(idx);
        if ticks.last().map_or(true, |(px, _)| *px != x) {
            ticks.push((x, dates[idx].to_string()));
        }
    }
    ticks
}

fn rolling_figure(title: &str, y_label: &str, series: &RollingSeries) -> String {
    let points = series.points();
    let first = points.first().map(|p| p.date).unwrap_or_default();
    let x_of = |p: &RollingPoint| (p.date - first).num_days() as f64;

    let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    for p in points {
        match p.value {
            Some(v) => current.push((x_of(p), v)),
            None => {
                if !current.is_empty() {
                    segments.push(std::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        segments.push(current);
    }

    let dates: Vec<NaiveDate> = points.iter().map(|p| p.date).collect();
    let ticks = date_ticks(&dates, |i| x_of(&points[i]));
    let cfg = ChartConfig { title: title.to_string(), y_label: y_label.to_string(), x_ticks: ticks };
    let line = LineSeries { label: y_label.to_string(), color: COLOR_PRIMARY.to_string(), segments };
    line_chart(&cfg, &[line], &[])
}

fn forecast_figure(history: &[DatedValue], fc: &ForecastResult) -> String {
    let keep = history.len().min(500);
    let tail = &history[history.len() - keep..];
    let hist_points: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .map(|(i, p)| (i as f64 - (keep as f64 - 1.0), p.value))
        .collect();
    let fc_points: Vec<(f64, f64)> =
        fc.point.iter().enumerate().map(|(s, &v)| (s as f64 + 1.0, v)).collect();

    let band95 = Band {
        label: "95% interval".into(),
        color: COLOR_BAND_WIDE.into(),
        points: (0..fc.horizon)
            .map(|s| (s as f64 + 1.0, fc.lower_95[s], fc.upper_95[s]))
            .collect(),
    };
    let band80 = Band {
        label: "80% interval".into(),
        color: COLOR_BAND_NARROW.into(),
        points: (0..fc.horizon)
            .map(|s| (s as f64 + 1.0, fc.lower_80[s], fc.upper_80[s]))
            .collect(),
    };

    let x_lo = -(keep as f64 - 1.0);
    let x_hi = fc.horizon as f64;
    let mut ticks: Vec<(f64, String)> = Vec::new();
    for v in [x_lo, x_lo / 2.0, 0.0, x_hi / 2.0, x_hi] {
        let v = v.round();
        if ticks.last().map_or(true, |(pv, _)| *pv != v) {
            ticks.push((v, format!("{v:.0}")));
        }
    }

    let cfg = ChartConfig {
        title: format!("{}-step forecast of rolling std", fc.horizon),
        y_label: "window std".into(),
        x_ticks: ticks,
    };
    let history_line = LineSeries::contiguous("observed", COLOR_PRIMARY, hist_points);
    let point_line = LineSeries::contiguous("forecast", COLOR_SECONDARY, fc_points);
    line_chart(&cfg, &[history_line, point_line], &[band95, band80])
}

fn residual_figure(fit: &ArimaxFit, diag: &DiagnosticReport) -> String {
    let residuals: Vec<(f64, f64)> =
        fit.residuals.iter().enumerate().map(|(i, p)| (i as f64, p.value)).collect();
    let dates: Vec<NaiveDate> = fit.residuals.iter().map(|p| p.date).collect();
    let ticks = date_ticks(&dates, |i| i as f64);
    let conf = 1.96 / (fit.residuals.len().max(1) as f64).sqrt();
    let hist: Vec<(f64, f64, usize)> =
        diag.histogram.iter().map(|b| (b.lo, b.hi, b.count)).collect();
    residual_panel(
        "regression-with-ARIMA-errors residual diagnostics",
        &ticks,
        &residuals,
        &diag.acf,
        conf,
        &hist,
    )
}

fn ml_figure(name: &str, preds: &[crate::ml::ModelPrediction]) -> String {
    let first = preds.first().map(|p| p.date).unwrap_or_default();
    let x_of = |d: NaiveDate| (d - first).num_days() as f64;
    let actual: Vec<(f64, f64)> = preds.iter().map(|p| (x_of(p.date), p.actual)).collect();
    let predicted: Vec<(f64, f64)> = preds.iter().map(|p| (x_of(p.date), p.predicted)).collect();
    let dates: Vec<NaiveDate> = preds.iter().map(|p| p.date).collect();
    let ticks = date_ticks(&dates, |i| x_of(dates[i]));
    let cfg = ChartConfig {
        title: format!("held-out rolling std: actual vs {name}"),
        y_label: "window std".into(),
        x_ticks: ticks,
    };
    line_chart(
        &cfg,
        &[
            LineSeries::contiguous("actual", COLOR_PRIMARY, actual),
            LineSeries::contiguous(name, COLOR_SECONDARY, predicted),
        ],
        &[],
    )
}

// ==================== stages ====================

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<StageOutput, PipelineError> {
    let t0 = Instant::now();
    let text = fs::read_to_string(&cfg.input).map_err(|e| PipelineError::ReadFailed {
        path: cfg.input.display().to_string(),
        source: e,
    })?;
    let parsed = parse_fred_csv(&text)?;
    let (series, report) = clean_series(&parsed.rows, &parsed.series_id)?;

    let pairs: Vec<(NaiveDate, f64)> =
        series.points().iter().map(|p| (p.date, p.price)).collect();
    write_series_csv(&cfg.out_dir.join(PRICES_CLEAN), &pairs)?;
    write_json(
        &cfg.out_dir.join(CLEANING_REPORT),
        &Versioned { schema_version: SCHEMA_VERSION, payload: &report },
    )?;

    Ok(StageOutput {
        name: "ingest".into(),
        millis: t0.elapsed().as_millis() as u64,
        files: vec![PRICES_CLEAN.into(), CLEANING_REPORT.into()],
    })
}

#[derive(Debug, Clone, Serialize)]
struct RollingArtifact {
    schema_version: u32,
    width: usize,
    step: usize,
    m: usize,
    r_mode: RMode,
    r: f64,
    n_prices: usize,
    n_returns: usize,
    n_windows: usize,
    std_defined: usize,
    std_undefined: usize,
    sampen_defined: usize,
    sampen_undefined: usize,
    first_window_date: Option<NaiveDate>,
    last_window_date: Option<NaiveDate>,
}

pub fn cmd_rolling(cfg: &PipelineConfig) -> Result<StageOutput, PipelineError> {
    let t0 = Instant::now();
    let prices = load_prices(cfg)?;
    let returns = log_returns(&prices);
    let config = RollingConfig::new(cfg.width, cfg.step)?;

    let std_series = rolling_std(returns.points(), config)?;
    let tolerance = match cfg.r_mode {
        RMode::Abs => ToleranceRule::Absolute(cfg.r),
        RMode::Rel => ToleranceRule::RelativeToStd(cfg.r),
    };
    let params = SampEnParams::new(cfg.m, tolerance)?;
    let sampen_series = rolling_sample_entropy(returns.points(), config, params)?;

    let ret_pairs: Vec<(NaiveDate, f64)> =
        returns.points().iter().map(|p| (p.date, p.value)).collect();
    write_series_csv(&cfg.out_dir.join(RETURNS), &ret_pairs)?;
    write_rolling_csv(&cfg.out_dir.join(TS_STD), &std_series)?;
    write_rolling_csv(&cfg.out_dir.join(TS_SAMPEN), &sampen_series)?;

    let fig_std =
        rolling_figure("rolling std of log returns", "window std", &std_series);
    atomic_write(&cfg.out_dir.join(FIG_TS_STD), fig_std.as_bytes())?;
    let fig_sampen = rolling_figure(
        "rolling sample entropy of log returns",
        "window sample entropy",
        &sampen_series,
    );
    atomic_write(&cfg.out_dir.join(FIG_TS_SAMPEN), fig_sampen.as_bytes())?;

    let artifact = RollingArtifact {
        schema_version: SCHEMA_VERSION,
        width: cfg.width,
        step: cfg.step,
        m: cfg.m,
        r_mode: cfg.r_mode,
        r: cfg.r,
        n_prices: prices.len(),
        n_returns: returns.len(),
        n_windows: std_series.len(),
        std_defined: std_series.len() - std_series.undefined_count(),
        std_undefined: std_series.undefined_count(),
        sampen_defined: sampen_series.len() - sampen_series.undefined_count(),
        sampen_undefined: sampen_series.undefined_count(),
        first_window_date: std_series.points().first().map(|p| p.date),
        last_window_date: std_series.points().last().map(|p| p.date),
    };
    write_json(&cfg.out_dir.join(ROLLING_REPORT), &artifact)?;

    Ok(StageOutput {
        name: "rolling".into(),
        millis: t0.elapsed().as_millis() as u64,
        files: vec![
            RETURNS.into(),
            TS_STD.into(),
            TS_SAMPEN.into(),
            FIG_TS_STD.into(),
            FIG_TS_SAMPEN.into(),
            ROLLING_REPORT.into(),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
struct DiagnosticsArtifact {
    schema_version: u32,
    /// Jointly defined (std, sampen) points entering the correlation.
    n_joint: usize,
    /// Pearson correlation between rolling sample entropy and rolling std.
    pearson_r: f64,
    ljung_box_returns: TestResult,
    adf_rolling_std: TestResult,
    adf_rolling_sampen: TestResult,
}

pub fn cmd_diagnose(cfg: &PipelineConfig) -> Result<StageOutput, PipelineError> {
    let t0 = Instant::now();
    let prices = load_prices(cfg)?;
    let returns = log_returns(&prices);
    let (dates, std_vals, sampen_vals) = load_joint_series(cfg)?;

    let artifact = DiagnosticsArtifact {
        schema_version: SCHEMA_VERSION,
        n_joint: dates.len(),
        pearson_r: pearson(&sampen_vals, &std_vals)?,
        ljung_box_returns: ljung_box(&returns.values(), 10, 0)?,
        adf_rolling_std: adf_test(&std_vals)?,
        adf_rolling_sampen: adf_test(&sampen_vals)?,
    };
    write_json(&cfg.out_dir.join(DIAGNOSTICS), &artifact)?;

    Ok(StageOutput {
        name: "diagnose".into(),
        millis: t0.elapsed().as_millis() as u64,
        files: vec![DIAGNOSTICS.into()],
    })
}

#[derive(Debug, Clone, Serialize)]
struct ArimaxArtifact {
    schema_version: u32,
    p: usize,
    d: usize,
    q: usize,
    include_regressor: bool,
    auto_order: bool,
    seed: u64,
    beta: Option<f64>,
    beta_se: Option<f64>,
    phi: Vec<f64>,
    phi_se: Vec<f64>,
    theta: Vec<f64>,
    theta_se: Vec<f64>,
    sigma2: f64,
    css: f64,
    log_likelihood: f64,
    aic: f64,
    aicc: f64,
    bic: f64,
    n_effective: usize,
    converged: bool,
    forecast_horizon: usize,
    residual_diagnostics: DiagnosticReport,
}

pub fn cmd_arimax(cfg: &PipelineConfig) -> Result<StageOutput, PipelineError> {
    let t0 = Instant::now();
    let (dates, std_vals, sampen_vals) = load_joint_series(cfg)?;
    let y: Vec<DatedValue> = dates
        .iter()
        .zip(&std_vals)
        .map(|(&date, &value)| DatedValue { date, value })
        .collect();

    let fit = if cfg.auto_order {
        select_order(&y, Some(&sampen_vals), true, 5, 1, 5, cfg.seed)?
    } else {
        let (p, d, q) = cfg.order;
        let spec = ArimaxSpec::new(p, d, q, true)?;
        fit_regression_arima_errors(&y, Some(&sampen_vals), spec, cfg.seed)?
    };
    let diag = residual_diagnostics(&fit, 10)?;
    let fc = forecast(&fit, cfg.horizon, FutureRegressor::HoldAtMean)?;

    let mut csv = String::from("step,point,lower_80,upper_80,lower_95,upper_95\n");
    for s in 0..fc.horizon {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s + 1,
            format_value(fc.point[s]),
            format_value(fc.lower_80[s]),
            format_value(fc.upper_80[s]),
            format_value(fc.lower_95[s]),
            format_value(fc.upper_95[s]),
        );
    }
    atomic_write(&cfg.out_dir.join(FORECAST), csv.as_bytes())?;

    atomic_write(&cfg.out_dir.join(FIG_FORECAST), forecast_figure(&y, &fc).as_bytes())?;
    atomic_write(&cfg.out_dir.join(FIG_RESIDUALS), residual_figure(&fit, &diag).as_bytes())?;

    let artifact = ArimaxArtifact {
        schema_version: SCHEMA_VERSION,
        p: fit.spec.p,
        d: fit.spec.d,
        q: fit.spec.q,
        include_regressor: fit.spec.include_regressor,
        auto_order: cfg.auto_order,
        seed: cfg.seed,
        beta: fit.beta,
        beta_se: fit.beta_se,
        phi: fit.phi.clone(),
        phi_se: fit.phi_se.clone(),
        theta: fit.theta.clone(),
        theta_se: fit.theta_se.clone(),
        sigma2: fit.sigma2,
        css: fit.css,
        log_likelihood: fit.log_likelihood,
        aic: fit.aic,
        aicc: fit.aicc,
        bic: fit.bic,
        n_effective: fit.n_effective,
        converged: fit.converged,
        forecast_horizon: cfg.horizon,
        residual_diagnostics: diag,
    };
    write_json(&cfg.out_dir.join(ARIMAX_REPORT), &artifact)?;

    Ok(StageOutput {
        name: "arimax".into(),
        millis: t0.elapsed().as_millis() as u64,
        files: vec![
            ARIMAX_REPORT.into(),
            FORECAST.into(),
            FIG_FORECAST.into(),
            FIG_RESIDUALS.into(),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
struct SvrSettings {
    c: f64,
    epsilon: f64,
    gamma: f64,
    tol: f64,
}

#[derive(Debug, Clone, Serialize)]
struct MlArtifact {
    schema_version: u32,
    /// Windows where both rolling series are defined.
    n_joint: usize,
    /// Windows dropped because one of the rolling series was undefined.
    n_dropped_undefined: usize,
    train_len: usize,
    test_len: usize,
    split_ratio: f64,
    svr: SvrSettings,
    knn_k: usize,
    metrics: BTreeMap<String, Metrics>,
    details: BTreeMap<String, BTreeMap<String, f64>>,
}

pub fn cmd_ml(cfg: &PipelineConfig) -> Result<StageOutput, PipelineError> {
    let t0 = Instant::now();
    let std_points = load_rolling(cfg, TS_STD)?;
    let sampen_points = load_rolling(cfg, TS_SAMPEN)?;
    let (dates, std_vals, sampen_vals) =
        defined_intersection(&std_points, &sampen_points, TS_STD, TS_SAMPEN)?;
    let n_joint = dates.len();
    let n_dropped = std_points.len() - n_joint;

    // feature: rolling sample entropy; target: rolling std
    let set = SupervisedSet::new(dates, sampen_vals, std_vals)?;
    let svr_params = SvrParams::new(cfg.svr_c, cfg.svr_epsilon, cfg.svr_gamma)?;
    let comparison: ComparisonReport = run_comparison(
        &set,
        &ComparisonConfig { ratio: cfg.ratio, svr: svr_params.clone(), knn_k: cfg.knn_k },
    )?;

    let model_files =
        [("ols", ML_PRED_OLS, FIG_ML_OLS), ("svr", ML_PRED_SVR, FIG_ML_SVR), ("knn", ML_PRED_KNN, FIG_ML_KNN)];
    for (name, csv_file, fig_file) in model_files {
        let preds = &comparison.predictions[name];
        let mut csv = String::from("date,actual,predicted\n");
        for p in preds {
            let _ = writeln!(
                csv,
                "{},{},{}",
                p.date,
                format_value(p.actual),
                format_value(p.predicted),
            );
        }
        atomic_write(&cfg.out_dir.join(csv_file), csv.as_bytes())?;
        atomic_write(&cfg.out_dir.join(fig_file), ml_figure(name, preds).as_bytes())?;
    }

    let artifact = MlArtifact {
        schema_version: SCHEMA_VERSION,
        n_joint,
        n_dropped_undefined: n_dropped,
        train_len: comparison.train_len,
        test_len: comparison.test_len,
        split_ratio: comparison.split_ratio,
        svr: SvrSettings {
            c: svr_params.c,
            epsilon: svr_params.epsilon,
            gamma: svr_params.gamma,
            tol: svr_params.tol,
        },
        knn_k: cfg.knn_k,
        metrics: comparison.metrics.clone(),
        details: comparison.details.clone(),
    };
    write_json(&cfg.out_dir.join(ML_REPORT), &artifact)?;

    Ok(StageOutput {
        name: "ml".into(),
        millis: t0.elapsed().as_millis() as u64,
        files: vec![
            ML_REPORT.into(),
            ML_PRED_OLS.into(),
            ML_PRED_SVR.into(),
            ML_PRED_KNN.into(),
            FIG_ML_OLS.into(),
            FIG_ML_SVR.into(),
            FIG_ML_KNN.into(),
        ],
    })
}

// ==================== full run ====================

/// Everything a run produced, in one document: the configuration echo,
/// the per-stage summaries re-read from their artifacts, file digests,
/// and timings.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: PipelineConfig,
    pub cleaning: serde_json::Value,
    pub rolling: serde_json::Value,
    pub diagnostics: serde_json::Value,
    pub arimax: serde_json::Value,
    pub ml: serde_json::Value,
    pub stages: Vec<StageOutput>,
    /// Hashes of every stage artifact. `run_report.json` itself is
    /// excluded: stage timings vary run to run, while the manifest must
    /// be byte-comparable across reruns.
    pub manifest: Vec<ManifestEntry>,
}

fn read_json_artifact(cfg: &PipelineConfig, name: &str) -> Result<serde_json::Value, PipelineError> {
    let text = read_artifact(cfg, name)?;
    Ok(serde_json::from_str(&text).map_err(ReportError::from)?)
}

pub fn cmd_all(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let stages = vec![
        cmd_ingest(cfg)?,
        cmd_rolling(cfg)?,
        cmd_diagnose(cfg)?,
        cmd_arimax(cfg)?,
        cmd_ml(cfg)?,
    ];
    let all_files: Vec<String> =
        stages.iter().flat_map(|s| s.files.iter().cloned()).collect();
    let manifest = manifest_for(&cfg.out_dir, &all_files)?;
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        cleaning: read_json_artifact(cfg, CLEANING_REPORT)?,
        rolling: read_json_artifact(cfg, ROLLING_REPORT)?,
        diagnostics: read_json_artifact(cfg, DIAGNOSTICS)?,
        arimax: read_json_artifact(cfg, ARIMAX_REPORT)?,
        ml: read_json_artifact(cfg, ML_REPORT)?,
        stages,
        manifest,
    };
    write_json(&cfg.out_dir.join(RUN_REPORT), &report)?;
    Ok(report)
}

// ==================== tests ====================

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// FRED-format CSV with weekday dates, a few missing markers, and one
    /// negative settlement row.
    fn synthetic_fred_csv(n: usize, seed: u64) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).unwrap();
        let mut out = String::from("observation_date,TESTSERIES\n");
        let mut date = NaiveDate::from_ymd_opt(2019, 1, 2).unwrap();
        let mut price: f64 = 55.0;
        let mut emitted = 0usize;
        while emitted < n {
            let dow = date.format("%u").to_string();
            if dow != "6" && dow != "7" {
                if emitted % 97 == 43 {
                    out.push_str(&format!("{date},.\n"));
                } else if emitted == n / 2 {
                    out.push_str(&format!("{date},-37.63\n"));
                } else {
                    price *= (normal.sample(&mut rng) as f64).exp();
                    out.push_str(&format!("{date},{price:.2}\n"));
                }
                emitted += 1;
            }
            date = date.succ_opt().unwrap();
        }
        out
    }

    fn test_config(dir: &std::path::Path, n: usize) -> PipelineConfig {
        let input = dir.join("input.csv");
        fs::write(&input, synthetic_fred_csv(n, 42)).unwrap();
        let mut cfg = PipelineConfig::new(input, dir.join("out"));
        cfg.width = 30;
        cfg.horizon = 20;
        cfg.order = (1, 1, 1);
        cfg
    }

    #[test]
    fn ingest_writes_clean_prices_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path(), 200);
        let stage = cmd_ingest(&cfg).unwrap();
        assert_eq!(stage.name, "ingest");
        assert_eq!(stage.files.len(), 2);

        let report_text = fs::read_to_string(cfg.out_dir.join(CLEANING_REPORT)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report_text).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["input_rows"], 200);
        assert_eq!(v["dropped_nonpositive"], 1);
        assert!(v["dropped_missing"].as_u64().unwrap() >= 1);

        let prices = load_prices(&cfg).unwrap();
        assert_eq!(
            prices.len() as u64,
            v["kept_rows"].as_u64().unwrap()
        );
    }

    #[test]
    fn rolling_counts_line_up() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path(), 200);
        cmd_ingest(&cfg).unwrap();
        cmd_rolling(&cfg).unwrap();

        let prices = load_prices(&cfg).unwrap();
        let std_points = load_rolling(&cfg, TS_STD).unwrap();
        let sampen_points = load_rolling(&cfg, TS_SAMPEN).unwrap();
        let n_returns = prices.len() - 1;
        assert_eq!(std_points.len(), (n_returns - 30) / 1 + 1);
        assert_eq!(std_points.len(), sampen_points.len());
        // right-edge dating: windows share dates across statistics
        for (a, b) in std_points.iter().zip(&sampen_points) {
            assert_eq!(a.date, b.date);
        }

        let report_text = fs::read_to_string(cfg.out_dir.join(ROLLING_REPORT)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report_text).unwrap();
        assert_eq!(v["n_windows"].as_u64().unwrap() as usize, std_points.len());
        assert_eq!(v["width"], 30);
    }

    #[test]
    fn stages_fail_cleanly_without_predecessors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(dir.path().join("missing.csv"), dir.path().join("out"));
        assert!(matches!(cmd_rolling(&cfg), Err(PipelineError::MissingArtifact(_))));
        assert!(matches!(cmd_diagnose(&cfg), Err(PipelineError::MissingArtifact(_))));
        assert!(matches!(cmd_ml(&cfg), Err(PipelineError::MissingArtifact(_))));
        assert!(matches!(cmd_ingest(&cfg), Err(PipelineError::ReadFailed { .. })));
    }

    #[test]
    fn full_pipeline_produces_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(dir.path(), 320);
        let report = cmd_all(&cfg).unwrap();

        assert_eq!(report.stages.len(), 5);
        assert!(report.manifest.len() >= 12, "manifest has {}", report.manifest.len());
        assert!(report.manifest.iter().all(|e| e.path != RUN_REPORT));
        // sorted manifest with real hashes
        for pair in report.manifest.windows(2) {
            assert!(pair[0].path < pair[1].path);
        }
        for entry in &report.manifest {
            assert_eq!(entry.sha256.len(), 64);
            assert!(entry.bytes > 0);
            assert!(cfg.out_dir.join(&entry.path).exists());
        }

        // the JSON artifacts parse and carry the schema tag
        for name in [DIAGNOSTICS, ARIMAX_REPORT, ML_REPORT, RUN_REPORT] {
            let text = fs::read_to_string(cfg.out_dir.join(name)).unwrap();
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["schema_version"], 1, "{name}");
        }

        // forecast CSV has horizon rows plus header
        let fc = fs::read_to_string(cfg.out_dir.join(FORECAST)).unwrap();
        assert_eq!(fc.lines().count(), 21);
        assert!(fc.starts_with("step,point,lower_80,upper_80,lower_95,upper_95\n"));
    }
}
