//! Rolling sample-entropy and volatility toolkit for daily price series.
//!
//! The crate ingests FRED-format CSV price data, computes log returns,
//! rolling standard deviation and rolling sample entropy, runs stationarity
//! and autocorrelation diagnostics, fits a regression with ARIMA errors, and
//! compares three regressors (OLS, epsilon-SVR, KNN) that predict rolling
//! volatility from rolling entropy. The `entrovol` binary exposes the whole
//! pipeline as subcommands; every stage writes deterministic artifacts.

pub mod arimax;
pub mod entropy;
pub mod ingest;
pub mod ml;
pub mod optim;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod series;
pub mod stats;

pub use entropy::{sample_entropy, sample_entropy_naive, SampEnParams, ToleranceRule};
pub use ingest::{clean_series, parse_fred_csv, PriceSeries};
pub use series::{log_returns, rolling_std, RollingConfig, RollingSeries};
