//! Sample entropy over fixed windows.
//!
//! SampEn(m, r) = -ln(A/B) where B counts ordered template pairs of length m
//! within Chebyshev distance r and A counts the same index pairs still
//! matching when the templates are extended to length m+1. Both template
//! sets run over start indices 0..N-m, self-pairs excluded, matching on the
//! closed ball (d <= r). When no pairs match at either length the statistic
//! is undefined and reported as a marker, not a sentinel value.

use thiserror::Error;

use crate::series::{rolling_apply, sample_std, DatedValue, RollingConfig, RollingSeries, SeriesError};

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty vectors")]
    Empty,
    #[error("series too short: need at least {need} points for m = {m}, got {got}")]
    SeriesTooShort { need: usize, m: usize, got: usize },
    #[error("embedding dimension m must be at least 1")]
    ZeroEmbedding,
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("degenerate tolerance: window is constant, r = {factor} * std = 0")]
    DegenerateTolerance { factor: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// How the matching tolerance is derived for a window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum ToleranceRule {
    /// Fixed tolerance in the units of the data.
    Absolute(f64),
    /// factor * sample std of the window, recomputed per window.
    RelativeToStd(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SampEnParams {
    pub m: usize,
    pub tolerance: ToleranceRule,
}

impl SampEnParams {
    pub fn new(m: usize, tolerance: ToleranceRule) -> Result<Self, EntropyError> {
        if m == 0 {
            return Err(EntropyError::ZeroEmbedding);
        }
        let r = match tolerance {
            ToleranceRule::Absolute(r) => r,
            ToleranceRule::RelativeToStd(f) => f,
        };
        if !(r.is_finite() && r > 0.0) {
            return Err(EntropyError::InvalidTolerance(r));
        }
        Ok(Self { m, tolerance })
    }
}

impl Default for SampEnParams {
    fn default() -> Self {
        Self { m: 2, tolerance: ToleranceRule::RelativeToStd(0.2) }
    }
}

/// Ordered-pair match counts. `b_pairs` counts length-m matches, `a_pairs`
/// length-(m+1) matches over the same start-index range; a_pairs <= b_pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchCounts {
    pub a_pairs: u64,
    pub b_pairs: u64,
    pub templates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampEnResult {
    /// None when no template pairs matched (statistic undefined).
    pub value: Option<f64>,
    pub counts: MatchCounts,
    pub effective_r: f64,
}

// ==================== distances and counting ====================

pub fn chebyshev_distance(u: &[f64], v: &[f64]) -> Result<f64, EntropyError> {
    if u.is_empty() || v.is_empty() {
        return Err(EntropyError::Empty);
    }
    if u.len() != v.len() {
        return Err(EntropyError::LengthMismatch(u.len(), v.len()));
    }
    let mut d = 0.0f64;
    for (a, b) in u.iter().zip(v) {
        let diff = (a - b).abs();
        if diff > d {
            d = diff;
        }
    }
    Ok(d)
}

/// Count length-m and length-(m+1) template matches in one pass.
///
/// Each unordered pair is visited once; the m-coordinate scan bails at the
/// first coordinate exceeding r, and the (m+1) check reuses the m result, so
/// the counts are exactly those of the naive double loop.
pub fn count_matches(window: &[f64], m: usize, r: f64) -> Result<MatchCounts, EntropyError> {
    if m == 0 {
        return Err(EntropyError::ZeroEmbedding);
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(EntropyError::InvalidTolerance(r));
    }
    let n = window.len();
    if n < m + 2 {
        return Err(EntropyError::SeriesTooShort { need: m + 2, m, got: n });
    }
    let templates = n - m;
    let mut a_pairs = 0u64;
    let mut b_pairs = 0u64;
    for i in 0..templates {
        for j in (i + 1)..templates {
            let mut matches_m = true;
            for k in 0..m {
                if (window[i + k] - window[j + k]).abs() > r {
                    matches_m = false;
                    break;
                }
            }
            if matches_m {
                b_pairs += 2;
                if (window[i + m] - window[j + m]).abs() <= r {
                    a_pairs += 2;
                }
            }
        }
    }
    Ok(MatchCounts { a_pairs, b_pairs, templates })
}

fn resolve_r(window: &[f64], params: SampEnParams) -> Result<f64, EntropyError> {
    match params.tolerance {
        ToleranceRule::Absolute(r) => Ok(r),
        ToleranceRule::RelativeToStd(factor) => {
            let r = factor * sample_std(window);
            if r > 0.0 {
                Ok(r)
            } else {
                Err(EntropyError::DegenerateTolerance { factor })
            }
        }
    }
}

fn from_counts(counts: MatchCounts, effective_r: f64) -> SampEnResult {
    let value = if counts.a_pairs > 0 && counts.b_pairs > 0 {
        Some(-((counts.a_pairs as f64 / counts.b_pairs as f64).ln()))
    } else {
        None
    };
    SampEnResult { value, counts, effective_r }
}

pub fn sample_entropy(window: &[f64], params: SampEnParams) -> Result<SampEnResult, EntropyError> {
    let params = SampEnParams::new(params.m, params.tolerance)?;
    let r = resolve_r(window, params)?;
    let counts = count_matches(window, params.m, r)?;
    Ok(from_counts(counts, r))
}

/// Brute-force reference: materializes every template pair and computes the
/// full Chebyshev distance both at length m and m+1. Slow on purpose; kept
/// as the oracle the optimized counter is checked against.
pub fn sample_entropy_naive(
    window: &[f64],
    params: SampEnParams,
) -> Result<SampEnResult, EntropyError> {
    let params = SampEnParams::new(params.m, params.tolerance)?;
    let m = params.m;
    let r = resolve_r(window, params)?;
    let n = window.len();
    if n < m + 2 {
        return Err(EntropyError::SeriesTooShort { need: m + 2, m, got: n });
    }
    let templates = n - m;
    let mut a_pairs = 0u64;
    let mut b_pairs = 0u64;
    for i in 0..templates {
        for j in 0..templates {
            if i == j {
                continue;
            }
            if chebyshev_distance(&window[i..i + m], &window[j..j + m])? <= r {
                b_pairs += 1;
            }
            if chebyshev_distance(&window[i..i + m + 1], &window[j..j + m + 1])? <= r {
                a_pairs += 1;
            }
        }
    }
    Ok(from_counts(MatchCounts { a_pairs, b_pairs, templates }, r))
}

// ==================== rolling ====================

/// Sample entropy over rolling windows. Degenerate windows (constant input
/// under a relative tolerance) and windows with no matches come out as
/// undefined markers rather than failing the whole run.
pub fn rolling_sample_entropy(
    points: &[DatedValue],
    config: RollingConfig,
    params: SampEnParams,
) -> Result<RollingSeries, EntropyError> {
    let params = SampEnParams::new(params.m, params.tolerance)?;
    if config.width() < params.m + 2 {
        return Err(EntropyError::SeriesTooShort {
            need: params.m + 2,
            m: params.m,
            got: config.width(),
        });
    }
    let series = rolling_apply(points, config, |window| match sample_entropy(window, params) {
        Ok(res) => res.value,
        Err(EntropyError::DegenerateTolerance { .. }) => None,
        Err(e) => unreachable!("window statistics validated up front: {e}"),
    })?;
    Ok(series)
}

// ==================== tests ====================
