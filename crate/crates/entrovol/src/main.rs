//! entrovol: entropy/volatility toolkit for daily price series.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use entrovol::pipeline::{
    cmd_all, cmd_arimax, cmd_diagnose, cmd_ingest, cmd_ml, cmd_rolling, PipelineConfig, RMode,
    StageOutput,
};

#[derive(Debug, Parser)]
#[command(
    name = "entrovol",
    version,
    about = "rolling volatility and sample-entropy analysis of a daily price series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Input CSV in FRED layout: a date column then a value column,
    /// missing values marked "."
    #[arg(long, global = true, default_value = "data/DCOILWTICO.csv")]
    input: PathBuf,

    /// Output directory (the ENTROVOL_OUT environment variable, when
    /// set, overrides this flag)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Rolling window width in observations
    #[arg(long, global = true, default_value_t = 252)]
    width: usize,

    /// Offset between consecutive windows
    #[arg(long, global = true, default_value_t = 1)]
    step: usize,

    /// Sample-entropy embedding dimension
    #[arg(long, global = true, default_value_t = 2)]
    m: usize,

    /// Tolerance rule: rel scales --r by each window's std, abs uses
    /// --r as-is
    #[arg(long, global = true, value_enum, default_value_t = RModeArg::Rel)]
    r_mode: RModeArg,

    /// Sample-entropy tolerance parameter
    #[arg(long, global = true, default_value_t = 0.2)]
    r: f64,

    /// ARIMA error order as "p,d,q"
    #[arg(long, global = true, default_value = "4,1,3", value_parser = parse_order)]
    order: (usize, usize, usize),

    /// Pick the order by an AICc grid search (p,q <= 5, d <= 1) instead
    /// of --order
    #[arg(long, global = true)]
    auto_order: bool,

    /// Forecast horizon in steps
    #[arg(long, global = true, default_value_t = 300)]
    horizon: usize,

    /// Chronological train fraction for the model comparison
    #[arg(long, global = true, default_value_t = 0.8)]
    ratio: f64,

    /// SVR box constraint C
    #[arg(long, global = true, default_value_t = 1.0)]
    svr_c: f64,

    /// SVR tube half-width, in standardized target units
    #[arg(long = "svr-eps", global = true, default_value_t = 0.1)]
    svr_epsilon: f64,

    /// SVR RBF kernel bandwidth
    #[arg(long, global = true, default_value_t = 1.0)]
    svr_gamma: f64,

    /// Neighbour count for the KNN regressor
    #[arg(long, global = true, default_value_t = 5)]
    knn_k: usize,

    /// Seed for optimizer restart jitter
    #[arg(long, global = true, default_value_t = 2023)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and clean the input CSV
    Ingest,
    /// Log returns plus rolling std and rolling sample entropy
    Rolling,
    /// Correlation, autocorrelation, and unit-root checks
    Diagnose,
    /// Regression with ARIMA errors, residual diagnostics, forecast
    Arimax,
    /// OLS / SVR / KNN comparison predicting rolling std from entropy
    Ml,
    /// Run every stage in order and write a run report
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RModeArg {
    Abs,
    Rel,
}

fn parse_order(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected \"p,d,q\", got {s:?}"));
    }
    let one = |t: &str| {
        t.parse::<usize>().map_err(|e| format!("bad order component {t:?}: {e}"))
    };
    Ok((one(parts[0])?, one(parts[1])?, one(parts[2])?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut out_dir = cli.out.clone();
    if let Ok(env_out) = std::env::var("ENTROVOL_OUT") {
        if !env_out.is_empty() {
            out_dir = PathBuf::from(env_out);
        }
    }

    let cfg = PipelineConfig {
        input: cli.input,
        out_dir,
        width: cli.width,
        step: cli.step,
        m: cli.m,
        r_mode: match cli.r_mode {
            RModeArg::Abs => RMode::Abs,
            RModeArg::Rel => RMode::Rel,
        },
        r: cli.r,
        order: cli.order,
        auto_order: cli.auto_order,
        horizon: cli.horizon,
        ratio: cli.ratio,
        svr_c: cli.svr_c,
        svr_epsilon: cli.svr_epsilon,
        svr_gamma: cli.svr_gamma,
        knn_k: cli.knn_k,
        seed: cli.seed,
    };

    let result: Result<Vec<StageOutput>, _> = match cli.command {
        Command::Ingest => cmd_ingest(&cfg).map(|s| vec![s]),
        Command::Rolling => cmd_rolling(&cfg).map(|s| vec![s]),
        Command::Diagnose => cmd_diagnose(&cfg).map(|s| vec![s]),
        Command::Arimax => cmd_arimax(&cfg).map(|s| vec![s]),
        Command::Ml => cmd_ml(&cfg).map(|s| vec![s]),
        Command::All => cmd_all(&cfg).map(|r| r.stages),
    };

    match result {
        Ok(stages) => {
            for s in &stages {
                println!("{}: {} file(s) in {} ms", s.name, s.files.len(), s.millis);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
