//! Experiment plumbing: sequence generators, price ingestion, prediction
//! logs and the experiment runner.

mod experiment;
mod generate;
mod log;
mod prices;

pub use experiment::{
    run_experiment, Algorithm, AlgorithmSummary, ExperimentConfig, ExperimentReport, GameSummary,
    InputSpec, IntervalComparator, RunResult, REPORT_SCHEMA_VERSION,
};
pub use generate::{
    generate, generate_sequence, GeneratorKind, GeneratorSpec, SignPattern, MAX_REJECTIONS,
};
pub use log::{read_log, score_log, write_log, LogScore, ReplayPredictor};
pub use prices::{ingest_price_file, ingest_prices, read_prices, PriceSeries};

use crate::error::{Error, Result};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "INTERVAL_REGRET_SEED";

/// `explicit` if given, else the value of [`SEED_ENV`], else zero.
pub fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(vec![format!("{SEED_ENV}={v:?} is not an unsigned integer")])
        }),
        Err(_) => Ok(0),
    }
}
