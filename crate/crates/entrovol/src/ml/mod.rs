//! Baseline learners predicting one rolling statistic from another:
//! ordinary least squares, epsilon-SVR with an RBF kernel, and k-nearest
//! neighbors, compared on a chronological train/test split.

mod knn;
mod ols;
mod svr;

pub use knn::{fit_knn, KnnModel};
pub use ols::{fit_ols, OlsModel};
pub use svr::{fit_svr, SvrModel, SvrParams};

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("length mismatch: {x} features vs {y} targets")]
    LengthMismatch { x: usize, y: usize },
    #[error("empty input")]
    Empty,
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("split ratio must leave both partitions nonempty, got {0}")]
    InvalidRatio(f64),
    #[error("feature is constant; cannot standardize")]
    ConstantFeature,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("actual value at index {0} is zero; relative error undefined")]
    ZeroActualForMape(usize),
}

// ==================== data ====================

/// Dated (feature, target) pairs in chronological order.
#[derive(Debug, Clone)]
pub struct SupervisedSet {
    pub dates: Vec<NaiveDate>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SupervisedSet {
    pub fn new(dates: Vec<NaiveDate>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, MlError> {
        if x.len() != y.len() {
            return Err(MlError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if dates.len() != x.len() {
            return Err(MlError::LengthMismatch { x: dates.len(), y: x.len() });
        }
        if x.is_empty() {
            return Err(MlError::Empty);
        }
        Ok(Self { dates, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Order-preserving split: the first floor(ratio * n) points train, the
/// rest test. Requires at least 10 points and both partitions nonempty.
pub fn chrono_split(
    set: &SupervisedSet,
    ratio: f64,
) -> Result<(SupervisedSet, SupervisedSet), MlError> {
    let n = set.len();
    if n < 10 {
        return Err(MlError::TooFewPoints { need: 10, got: n });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(MlError::InvalidRatio(ratio));
    }
    let cut = (ratio * n as f64).floor() as usize;
    if cut == 0 || cut >= n {
        return Err(MlError::InvalidRatio(ratio));
    }
    let train = SupervisedSet {
        dates: set.dates[..cut].to_vec(),
        x: set.x[..cut].to_vec(),
        y: set.y[..cut].to_vec(),
    };
    let test = SupervisedSet {
        dates: set.dates[cut..].to_vec(),
        x: set.x[cut..].to_vec(),
        y: set.y[cut..].to_vec(),
    };
    Ok((train, test))
}

// ==================== standardization ====================

/// Mean/std standardizer (sample std, n-1 denominator).
#[derive(Debug, Clone, Copy)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn fit(xs: &[f64]) -> Result<Self, MlError> {
        if xs.is_empty() {
            return Err(MlError::Empty);
        }
        let s = crate::series::sample_std(xs);
        if !(s > 0.0) {
            return Err(MlError::ConstantFeature);
        }
        Ok(Self { mean: mean_of(xs), std: s })
    }

    /// Like `fit`, but a constant input standardizes with unit scale
    /// instead of erroring (used for targets, where a constant is legal).
    pub fn fit_or_unit(xs: &[f64]) -> Self {
        Self::fit(xs).unwrap_or(Self { mean: mean_of(xs), std: 1.0 })
    }

    pub fn transform(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }

    pub fn transform_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&v| self.transform(v)).collect()
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// ==================== metrics ====================

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    pub mae: f64,
    /// 100 * mean(|actual - predicted| / |actual|).
    pub mape_percent: f64,
    pub mse: f64,
    pub rmse: f64,
}

pub fn compute_metrics(actual: &[f64], predicted: &[f64]) -> Result<Metrics, MlError> {
    if actual.len() != predicted.len() {
        return Err(MlError::LengthMismatch { x: actual.len(), y: predicted.len() });
    }
    if actual.is_empty() {
        return Err(MlError::Empty);
    }
    let n = actual.len() as f64;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut rel_sum = 0.0;
    for (i, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        let err = a - p;
        abs_sum += err.abs();
        sq_sum += err * err;
        if a == 0.0 {
            return Err(MlError::ZeroActualForMape(i));
        }
        rel_sum += (err / a).abs();
    }
    let mse = sq_sum / n;
    Ok(Metrics {
        mae: abs_sum / n,
        mape_percent: 100.0 * rel_sum / n,
        mse,
        rmse: mse.sqrt(),
    })
}

// ==================== model comparison ====================

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub ratio: f64,
    pub svr: SvrParams,
    pub knn_k: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelPrediction {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub train_len: usize,
    pub test_len: usize,
    pub split_ratio: f64,
    /// Test-set metrics keyed by model name ("knn", "ols", "svr").
    pub metrics: BTreeMap<String, Metrics>,
    /// Fit summaries keyed by model name.
    pub details: BTreeMap<String, BTreeMap<String, f64>>,
    /// Test-set predictions keyed by model name.
    pub predictions: BTreeMap<String, Vec<ModelPrediction>>,
}

/// Fit all three models on the chronological training block and score
/// them on the held-out tail.
pub fn run_comparison(
    set: &SupervisedSet,
    cfg: &ComparisonConfig,
) -> Result<ComparisonReport, MlError> {
    let (train, test) = chrono_split(set, cfg.ratio)?;

    let ols = fit_ols(&train.x, &train.y)?;
    let svr = fit_svr(&train.x, &train.y, cfg.svr.clone())?;
    let knn = fit_knn(&train.x, &train.y, cfg.knn_k)?;

    let mut metrics = BTreeMap::new();
    let mut predictions = BTreeMap::new();
    let mut details: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();

    let preds: [(&str, Vec<f64>); 3] = [
        ("ols", test.x.iter().map(|&v| ols.predict(v)).collect()),
        ("svr", test.x.iter().map(|&v| svr.predict(v)).collect()),
        ("knn", test.x.iter().map(|&v| knn.predict(v)).collect()),
    ];
    for (name, predicted) in preds {
        metrics.insert(name.to_string(), compute_metrics(&test.y, &predicted)?);
        let rows = test
            .dates
            .iter()
            .zip(&test.y)
            .zip(&predicted)
            .map(|((&date, &actual), &predicted)| ModelPrediction { date, actual, predicted })
            .collect::<Vec<_>>();
        predictions.insert(name.to_string(), rows);
    }

    details.insert(
        "ols".into(),
        BTreeMap::from([
            ("slope".to_string(), ols.slope),
            ("intercept".to_string(), ols.intercept),
        ]),
    );
    details.insert(
        "svr".into(),
        BTreeMap::from([
            ("iterations".to_string(), svr.iterations() as f64),
            ("converged".to_string(), f64::from(u8::from(svr.converged()))),
            ("support_vectors".to_string(), svr.support_vector_count() as f64),
            ("bias".to_string(), svr.bias()),
        ]),
    );
    details.insert(
        "knn".into(),
        BTreeMap::from([("k".to_string(), cfg.knn_k as f64)]),
    );

    Ok(ComparisonReport {
        train_len: train.len(),
        test_len: test.len(),
        split_ratio: cfg.ratio,
        metrics,
        details,
        predictions,
    })
}

// ==================== tests ====================
