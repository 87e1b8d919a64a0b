//! FRED-format CSV ingestion and cleaned price series.
//!
//! Input files look like
//!
//! ```text
//! DATE,DCOILWTICO
//! 1986-01-02,25.56
//! 1986-01-03,26.00
//! 2020-04-20,-36.98
//! 2020-11-26,.
//! ```
//!
//! A `.` (or empty) value marks a missing observation. Cleaning drops missing
//! rows and non-positive prices so that log returns stay defined; the counts
//! of both drop categories are reported alongside the cleaned series.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input: no header line")]
    EmptyFile,
    #[error("line {line}: malformed row ({reason})")]
    MalformedRow { line: usize, reason: String },
    #[error("dates not strictly increasing: {prev} is not before {next}")]
    NonMonotonicDates { prev: NaiveDate, next: NaiveDate },
    #[error("too short: {kept} usable rows after cleaning, need at least 2")]
    TooShort { kept: usize },
    #[error("invalid price at {date}: {value} (must be finite and positive)")]
    InvalidPrice { date: NaiveDate, value: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One raw CSV row: a date plus either a price or a missing marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawObservation {
    pub date: NaiveDate,
    pub value: Option<f64>,
}

/// Parsed FRED file: the series id from the header plus all data rows in
/// file order.
#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub series_id: String,
    pub rows: Vec<RawObservation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

/// Cleaned daily price series. Invariants enforced on construction: at least
/// two points, strictly increasing dates, all prices finite and positive.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
    source_id: String,
}

impl PriceSeries {
    pub fn new(points: Vec<PricePoint>, source_id: impl Into<String>) -> Result<Self, IngestError> {
        if points.len() < 2 {
            return Err(IngestError::TooShort { kept: points.len() });
        }
        for p in &points {
            if !p.price.is_finite() || p.price <= 0.0 {
                return Err(IngestError::InvalidPrice { date: p.date, value: p.price });
            }
        }
        for w in points.windows(2) {
            if w[0].date >= w[1].date {
                return Err(IngestError::NonMonotonicDates { prev: w[0].date, next: w[1].date });
            }
        }
        Ok(Self { points, source_id: source_id.into() })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.points.iter().map(|p| p.date)
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.price)
    }
}

/// What cleaning did and why. `policy` spells out the drop rule so the
/// report is self-describing.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CleaningReport {
    pub input_rows: usize,
    pub kept_rows: usize,
    pub dropped_missing: usize,
    pub dropped_nonpositive: usize,
    pub policy: String,
}

// ==================== parsing ====================

/// Parse FRED-format CSV text: a two-column header line, then one
/// `date,value` row per line. Values of `.` or empty are missing. Line
/// numbers in errors are 1-based and count the header.
pub fn parse_fred_csv(text: &str) -> Result<ParsedCsv, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(IngestError::EmptyFile)?;
    let header = header.trim_end_matches('\r');
    if header.trim().is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != 2 || cols[0].trim().is_empty() || cols[1].trim().is_empty() {
        return Err(IngestError::MalformedRow {
            line: 1,
            reason: format!("expected two column names in header, got {:?}", header),
        });
    }
    let series_id = cols[1].trim().to_string();

    let mut rows = Vec::new();
    for (idx, raw_line) in lines {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.is_empty() {
            // tolerate a blank final line, reject blanks elsewhere
            if text.lines().count() == line_no {
                continue;
            }
            return Err(IngestError::MalformedRow { line: line_no, reason: "blank line".into() });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let date = NaiveDate::parse_from_str(fields[0].trim(), "%Y-%m-%d").map_err(|e| {
            IngestError::MalformedRow { line: line_no, reason: format!("bad date {:?}: {e}", fields[0]) }
        })?;
        let raw_value = fields[1].trim();
        let value = if raw_value == "." || raw_value.is_empty() {
            None
        } else {
            let v: f64 = raw_value.parse().map_err(|e| IngestError::MalformedRow {
                line: line_no,
                reason: format!("bad value {raw_value:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::MalformedRow {
                    line: line_no,
                    reason: format!("non-finite value {raw_value:?}"),
                });
            }
            Some(v)
        };
        rows.push(RawObservation { date, value });
    }

    Ok(ParsedCsv { series_id, rows })
}

// ==================== cleaning ====================

const CLEANING_POLICY: &str = "drop rows with a missing marker; drop rows with price <= 0 \
     (log returns require positive prices, e.g. the 2020-04-20 negative WTI settlement is removed)";

/// Drop unusable rows and build the cleaned series. Kept rows must be in
/// strictly increasing date order.
pub fn clean_series(
    rows: &[RawObservation],
    source_id: &str,
) -> Result<(PriceSeries, CleaningReport), IngestError> {
    let mut kept: Vec<PricePoint> = Vec::with_capacity(rows.len());
    let mut dropped_missing = 0usize;
    let mut dropped_nonpositive = 0usize;

    for row in rows {
        match row.value {
            None => dropped_missing += 1,
            Some(v) if v <= 0.0 => dropped_nonpositive += 1,
            Some(v) => {
                if let Some(last) = kept.last() {
                    if last.date >= row.date {
                        return Err(IngestError::NonMonotonicDates {
                            prev: last.date,
                            next: row.date,
                        });
                    }
                }
                kept.push(PricePoint { date: row.date, price: v });
            }
        }
    }

    if kept.len() < 2 {
        return Err(IngestError::TooShort { kept: kept.len() });
    }

    let report = CleaningReport {
        input_rows: rows.len(),
        kept_rows: kept.len(),
        dropped_missing,
        dropped_nonpositive,
        policy: CLEANING_POLICY.to_string(),
    };
    let series = PriceSeries::new(kept, source_id)?;
    Ok((series, report))
}

// ==================== writing ====================

/// Render a value with at least 10 significant digits in positional notation.
pub(crate) fn format_value(v: f64) -> String {
    debug_assert!(v.is_finite());
    if v == 0.0 {
        return "0.0000000000".to_string();
    }
    // Exact decimal exponent, avoiding log10 edge cases at powers of ten.
    let sci = format!("{:e}", v.abs());
    let exp: i32 = sci.split('e').nth(1).unwrap().parse().unwrap();
    let decimals = (9 - exp).clamp(0, 330) as usize;
    format!("{:.*}", decimals, v)
}

pub fn render_series_csv(points: &[(NaiveDate, f64)]) -> String {
    let mut out = String::with_capacity(24 * points.len() + 16);
    out.push_str("date,value\n");
    for (date, value) in points {
        let _ = writeln!(out, "{},{}", date, format_value(*value));
    }
    out
}

/// Write a dated series as two-column CSV, atomically (temp file + rename).
pub fn write_series_csv(path: &Path, points: &[(NaiveDate, f64)]) -> Result<(), IngestError> {
    crate::report::atomic_write(path, render_series_csv(points).as_bytes())?;
    Ok(())
}

// ==================== tests ====================
