//! Log returns and the rolling-window engine.
//!
//! Windows are index ranges `[k*step, k*step + width)` over the input; the
//! output point for window `k` is labelled with the date of the window's
//! last element (right edge). A statistic may be undefined for a window, in
//! which case the point carries a marker instead of a number.

use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

use crate::ingest::{format_value, PriceSeries};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("window width must be at least 2, got {0}")]
    WidthTooSmall(usize),
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("window width {width} exceeds series length {len}")]
    WindowTooWide { width: usize, len: usize },
    #[error("line {line}: malformed rolling row ({reason})")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A dated numeric observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatedValue {
    pub date: NaiveDate,
    pub value: f64,
}

/// Daily log returns, one per consecutive price pair, dated by the later day.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    points: Vec<DatedValue>,
}

impl ReturnSeries {
    pub fn points(&self) -> &[DatedValue] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// R_n = ln(P_n / P_{n-1}). Total given the `PriceSeries` invariants
/// (length >= 2, all prices positive).
pub fn log_returns(prices: &PriceSeries) -> ReturnSeries {
    let pts = prices.points();
    let mut points = Vec::with_capacity(pts.len() - 1);
    for w in pts.windows(2) {
        points.push(DatedValue { date: w[1].date, value: (w[1].price / w[0].price).ln() });
    }
    ReturnSeries { points }
}

// ==================== rolling engine ====================

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct RollingConfig {
    width: usize,
    step: usize,
}

impl RollingConfig {
    pub fn new(width: usize, step: usize) -> Result<Self, SeriesError> {
        if width < 2 {
            return Err(SeriesError::WidthTooSmall(width));
        }
        if step == 0 {
            return Err(SeriesError::ZeroStep);
        }
        Ok(Self { width, step })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Number of windows over an input of length `len`:
    /// floor((len - width)/step) + 1, or 0 if the input is shorter than one
    /// window.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.width {
            0
        } else {
            (len - self.width) / self.step + 1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingPoint {
    pub date: NaiveDate,
    pub value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RollingSeries {
    points: Vec<RollingPoint>,
    config: RollingConfig,
}

impl RollingSeries {
    pub fn points(&self) -> &[RollingPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn config(&self) -> RollingConfig {
        self.config
    }

    pub fn undefined_count(&self) -> usize {
        self.points.iter().filter(|p| p.value.is_none()).count()
    }

    /// Defined points only, in date order.
    pub fn defined(&self) -> Vec<DatedValue> {
        self.points
            .iter()
            .filter_map(|p| p.value.map(|v| DatedValue { date: p.date, value: v }))
            .collect()
    }
}

/// Apply `stat` to every window. The statistic returns `None` when it is
/// undefined for that window; such windows stay in the output as markers.
pub fn rolling_apply<F>(
    points: &[DatedValue],
    config: RollingConfig,
    mut stat: F,
) -> Result<RollingSeries, SeriesError>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    if points.len() < config.width {
        return Err(SeriesError::WindowTooWide { width: config.width, len: points.len() });
    }
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let count = config.window_count(points.len());
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let start = k * config.step;
        let end = start + config.width;
        out.push(RollingPoint { date: points[end - 1].date, value: stat(&values[start..end]) });
    }
    Ok(RollingSeries { points: out, config })
}

/// Rolling sample standard deviation (n-1 divisor) over `config` windows.
///
/// Uses running sums of x and x^2, re-anchored periodically; windows where
/// cancellation bites are recomputed directly with compensated summation.
pub fn rolling_std(
    points: &[DatedValue],
    config: RollingConfig,
) -> Result<RollingSeries, SeriesError> {
    if points.len() < config.width {
        return Err(SeriesError::WindowTooWide { width: config.width, len: points.len() });
    }
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let width = config.width;
    let step = config.step;
    let count = config.window_count(points.len());
    let n = width as f64;

    let mut out = Vec::with_capacity(count);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    const REANCHOR_EVERY: usize = 256;

    for k in 0..count {
        let start = k * step;
        let window = &values[start..start + width];
        if k == 0 || k % REANCHOR_EVERY == 0 || step >= width {
            let (s, s2) = compensated_sums(window);
            sum = s;
            sum_sq = s2;
        } else {
            for &leaving in &values[start - step..start] {
                sum -= leaving;
                sum_sq -= leaving * leaving;
            }
            for &entering in &values[start + width - step..start + width] {
                sum += entering;
                sum_sq += entering * entering;
            }
        }
        let mut var = (sum_sq - sum * sum / n) / (n - 1.0);
        if var < 0.0 {
            // cancellation; recompute this window from scratch
            let (s, s2) = compensated_sums(window);
            var = ((s2 - s * s / n) / (n - 1.0)).max(0.0);
        }
        out.push(RollingPoint { date: points[start + width - 1].date, value: Some(var.sqrt()) });
    }
    Ok(RollingSeries { points: out, config })
}

fn compensated_sums(xs: &[f64]) -> (f64, f64) {
    // Neumaier summation for both the sum and the sum of squares
    let mut s = 0.0f64;
    let mut cs = 0.0f64;
    let mut s2 = 0.0f64;
    let mut cs2 = 0.0f64;
    for &x in xs {
        let t = s + x;
        cs += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
        let x2 = x * x;
        let t2 = s2 + x2;
        cs2 += if s2.abs() >= x2.abs() { (s2 - t2) + x2 } else { (x2 - t2) + s2 };
        s2 = t2;
    }
    (s + cs, s2 + cs2)
}

/// Two-pass sample standard deviation with the n-1 divisor.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut acc = 0.0;
    for &x in xs {
        let d = x - mean;
        acc += d * d;
    }
    (acc / (n - 1.0)).sqrt()
}

// ==================== rolling CSV ====================

/// Rolling series persist as `date,value,defined`; undefined windows write a
/// `.` value with defined = 0.
pub fn render_rolling_csv(series: &RollingSeries) -> String {
    use std::fmt::Write as _;
    let mut out = String::with_capacity(28 * series.len() + 24);
    out.push_str("date,value,defined\n");
    for p in series.points() {
        match p.value {
            Some(v) => {
                let _ = writeln!(out, "{},{},1", p.date, format_value(v));
            }
            None => {
                let _ = writeln!(out, "{},.,0", p.date);
            }
        }
    }
    out
}

pub fn write_rolling_csv(path: &Path, series: &RollingSeries) -> Result<(), SeriesError> {
    crate::report::atomic_write(path, render_rolling_csv(series).as_bytes())?;
    Ok(())
}

/// Read back a `date,value,defined` rolling CSV.
pub fn parse_rolling_csv(text: &str) -> Result<Vec<RollingPoint>, SeriesError> {
    let mut points = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line_no == 1 {
            if line != "date,value,defined" {
                return Err(SeriesError::MalformedRow {
                    line: 1,
                    reason: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(SeriesError::MalformedRow {
                line: line_no,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d").map_err(|e| {
            SeriesError::MalformedRow { line: line_no, reason: format!("bad date: {e}") }
        })?;
        let value = match (fields[1], fields[2]) {
            (".", "0") => None,
            (raw, "1") => Some(raw.parse::<f64>().map_err(|e| SeriesError::MalformedRow {
                line: line_no,
                reason: format!("bad value {raw:?}: {e}"),
            })?),
            (v, d) => {
                return Err(SeriesError::MalformedRow {
                    line: line_no,
                    reason: format!("inconsistent value/defined pair ({v:?}, {d:?})"),
                })
            }
        };
        points.push(RollingPoint { date, value });
    }
    Ok(points)
}

// ==================== tests ====================
