use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate, GeneratorSpec};
use super::log::{read_log, ReplayPredictor};
use super::prices::ingest_price_file;
use super::resolve_seed;
use crate::baselines::{ConstantExpert, ExpertEnsemble};
use crate::error::{Error, Result};
use crate::payoff::{aligned_payoff_value, optimal_segmentation, Alpha};
use crate::predictor::{
    aligned_precompute, mc_precompute, real_precompute, run_game, ExactPredictor, MagnitudeModel,
    Predictor, StepRecord, EXACT_LIMIT,
};
use crate::rng;
use crate::sequence::{parse_values, PrefixSums};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

const PREDICTOR_SEED_PURPOSE: u64 = 1;

/// A bettor the harness can run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    IntervalExact,
    IntervalMc,
    IntervalAligned,
    /// Monte Carlo predictor with real-valued completions from the
    /// experiment's magnitude model.
    IntervalReal,
    Wm,
    ConstPlus,
    ConstMinus,
    /// Predictions read from a stored log.
    ReplayLog(PathBuf),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IntervalExact => f.write_str("interval-exact"),
            Self::IntervalMc => f.write_str("interval-mc"),
            Self::IntervalAligned => f.write_str("interval-aligned"),
            Self::IntervalReal => f.write_str("interval-real"),
            Self::Wm => f.write_str("wm"),
            Self::ConstPlus => f.write_str("const+"),
            Self::ConstMinus => f.write_str("const-"),
            Self::ReplayLog(p) => write!(f, "replay-log:{}", p.display()),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "interval-exact" | "exact" => Self::IntervalExact,
            "interval-mc" | "mc" => Self::IntervalMc,
            "interval-aligned" | "aligned" => Self::IntervalAligned,
            "interval-real" | "real" => Self::IntervalReal,
            "wm" => Self::Wm,
            "const+" => Self::ConstPlus,
            "const-" => Self::ConstMinus,
            other => match other.strip_prefix("replay-log:") {
                Some(p) if !p.is_empty() => Self::ReplayLog(PathBuf::from(p)),
                _ => return Err(Error::InvalidInput(format!("unknown algorithm {other:?}"))),
            },
        })
    }
}

impl TryFrom<String> for Algorithm {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.to_string()
    }
}

/// Where the sequences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InputSpec {
    /// Game `g` uses the generator with seed `generator.seed + g`.
    Generator {
        generator: GeneratorSpec,
        horizon: usize,
    },
    /// A sequence file in the text format (values may exceed one in
    /// magnitude); every game plays it.
    File { path: PathBuf },
    /// A `timestamp,price` CSV; `returns` selects clipped real returns
    /// instead of their signs.
    Prices {
        path: PathBuf,
        #[serde(default)]
        returns: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub input: InputSpec,
    pub algorithms: Vec<Algorithm>,
    pub alpha: f64,
    /// Falls back to the environment default when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub games: usize,
    /// Magnitude model for `interval-real`.
    #[serde(default)]
    pub model: Option<MagnitudeModel>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Problems visible without loading any input.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            out.push(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.algorithms.is_empty() {
            out.push("at least one algorithm is required".into());
        }
        if self.games == 0 {
            out.push("games must be at least 1".into());
        }
        if self.algorithms.contains(&Algorithm::IntervalReal) && self.model.is_none() {
            out.push("interval-real needs a magnitude model".into());
        }
        if let InputSpec::Generator { generator, horizon } = &self.input {
            out.extend(generator.problems_for(*horizon));
            out.extend(self.horizon_problems(*horizon));
        }
        if let Some(MagnitudeModel::Empirical { values }) = &self.model {
            if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                out.push("empirical magnitude model needs non-negative values".into());
            }
        }
        out
    }

    fn horizon_problems(&self, horizon: usize) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.algorithms {
            match a {
                Algorithm::IntervalExact if horizon > EXACT_LIMIT => out.push(format!(
                    "interval-exact is limited to horizon {EXACT_LIMIT}, got {horizon}"
                )),
                Algorithm::IntervalAligned if !horizon.is_power_of_two() => out.push(format!(
                    "interval-aligned needs a power-of-two horizon, got {horizon}"
                )),
                _ => {}
            }
        }
        out
    }
}

/// One interval of the optimal partition of an input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalComparator {
    pub start: usize,
    pub end: usize,
    pub height: f64,
    /// `α·√len`.
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: String,
    pub payoff: f64,
    pub clamp_count: usize,
    /// `payoff − P_α(X)`, or `payoff − P^A_α(X)` for the aligned predictor.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game: usize,
    pub sequence_seed: Option<u64>,
    pub predictor_seed: u64,
    pub horizon: usize,
    pub p_alpha: f64,
    pub p_alpha_aligned: Option<f64>,
    /// `|h([1, T])|`.
    pub best_constant: f64,
    /// `Σ|h(X_i)|` over the optimal partition.
    pub partition_expert: f64,
    pub partition: Vec<IntervalComparator>,
    pub results: Vec<RunResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub mean_payoff: f64,
    pub stderr: f64,
    pub total_clamps: usize,
    pub mean_slack: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub seed: u64,
    /// The configuration as run, with the seed filled in.
    pub config: ExperimentConfig,
    pub mean_p_alpha: f64,
    pub p_alpha_stderr: f64,
    pub algorithms: Vec<AlgorithmSummary>,
    pub games: Vec<GameSummary>,
    /// Returns outside `[-1, 1]` clipped during price ingestion.
    pub clip_count: usize,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    /// `game,algorithm,payoff,p_alpha,slack,clamp_count` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "game",
            "algorithm",
            "payoff",
            "p_alpha",
            "slack",
            "clamp_count",
        ])?;
        for g in &self.games {
            for r in &g.results {
                w.write_record([
                    g.game.to_string(),
                    r.algorithm.clone(),
                    r.payoff.to_string(),
                    g.p_alpha.to_string(),
                    r.slack.to_string(),
                    r.clamp_count.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn summary(&self, algorithm: &Algorithm) -> Option<&AlgorithmSummary> {
        let name = algorithm.to_string();
        self.algorithms.iter().find(|a| a.algorithm == name)
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn build_predictor(
    algo: &Algorithm,
    horizon: usize,
    alpha: Alpha,
    seed: u64,
    model: Option<&MagnitudeModel>,
    replay: Option<&Vec<StepRecord>>,
) -> Result<Box<dyn Predictor + Send>> {
    Ok(match algo {
        Algorithm::IntervalExact => Box::new(ExactPredictor::new(horizon, alpha)?),
        Algorithm::IntervalMc => Box::new(mc_precompute(horizon, alpha, seed)?),
        Algorithm::IntervalAligned => Box::new(aligned_precompute(horizon, alpha, seed)?),
        Algorithm::IntervalReal => {
            let m = model.ok_or_else(|| {
                Error::Config(vec!["interval-real needs a magnitude model".into()])
            })?;
            Box::new(real_precompute(horizon, alpha, seed, m.clone())?)
        }
        Algorithm::Wm => Box::new(ExpertEnsemble::two_constant(
            horizon,
            ExpertEnsemble::default_eta(horizon),
        )?),
        Algorithm::ConstPlus => Box::new(ConstantExpert::new(horizon, 1.0)?),
        Algorithm::ConstMinus => Box::new(ConstantExpert::new(horizon, -1.0)?),
        Algorithm::ReplayLog(_) => Box::new(ReplayPredictor::new(
            replay
                .expect("replay logs are loaded before games start")
                .clone(),
        )),
    })
}

fn play(
    config: &ExperimentConfig,
    alpha: Alpha,
    game: usize,
    sequence_seed: Option<u64>,
    predictor_seed: u64,
    values: &[f64],
    replays: &[Option<Vec<StepRecord>>],
) -> Result<GameSummary> {
    let horizon = values.len();
    let (p_alpha, partition) = optimal_segmentation(values, alpha);
    let p_alpha_aligned = if horizon.is_power_of_two() {
        Some(aligned_payoff_value(values, alpha)?)
    } else {
        None
    };
    let ps = PrefixSums::build(values);
    let mut comparators = Vec::with_capacity(partition.len());
    for iv in partition.intervals() {
        comparators.push(IntervalComparator {
            start: iv.start,
            end: iv.end,
            height: ps.height(*iv)?,
            penalty: alpha.get() * (iv.len() as f64).sqrt(),
        });
    }
    let mut results = Vec::with_capacity(config.algorithms.len());
    for (algo, replay) in config.algorithms.iter().zip(replays) {
        let mut p = build_predictor(
            algo,
            horizon,
            alpha,
            predictor_seed,
            config.model.as_ref(),
            replay.as_ref(),
        )?;
        let g = run_game(p.as_mut(), values)?;
        let benchmark = match algo {
            Algorithm::IntervalAligned => p_alpha_aligned.unwrap_or(p_alpha),
            _ => p_alpha,
        };
        results.push(RunResult {
            algorithm: algo.to_string(),
            payoff: g.payoff,
            clamp_count: g.clamp_count,
            slack: g.payoff - benchmark,
        });
    }
    Ok(GameSummary {
        game,
        sequence_seed,
        predictor_seed,
        horizon,
        p_alpha,
        p_alpha_aligned,
        best_constant: ps.span(0, horizon).abs(),
        partition_expert: comparators.iter().map(|c| c.height.abs()).sum(),
        partition: comparators,
        results,
    })
}

/// Runs every configured algorithm on every game.
///
/// Games run in parallel and are merged in game order, so the report is
/// reproducible from the configuration and seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let seed = resolve_seed(config.seed)?;
    let alpha = Alpha::new(config.alpha)?;

    let mut clip_count = 0;
    let fixed: Option<Vec<f64>> = match &config.input {
        InputSpec::Generator { .. } => None,
        InputSpec::File { path } => Some(parse_values(&std::fs::read_to_string(path)?)?),
        InputSpec::Prices { path, returns } => {
            let s = ingest_price_file(path)?;
            clip_count = s.clip_count;
            Some(if *returns { s.reals } else { s.bits }.into_values())
        }
    };
    if let Some(v) = &fixed {
        let mut problems = config.horizon_problems(v.len());
        if v.is_empty() {
            problems.push("input sequence is empty".into());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
    }
    let replays = config
        .algorithms
        .iter()
        .map(|a| match a {
            Algorithm::ReplayLog(p) => Ok(Some(read_log(std::fs::File::open(p)?)?)),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let games = (0..config.games)
        .into_par_iter()
        .map(|g| {
            let predictor_seed = rng::derive_seed(seed, g as u64, PREDICTOR_SEED_PURPOSE);
            match (&fixed, &config.input) {
                (Some(v), _) => play(config, alpha, g, None, predictor_seed, v, &replays),
                (None, InputSpec::Generator { generator, horizon }) => {
                    let mut spec = generator.clone();
                    spec.seed = generator.seed.wrapping_add(g as u64);
                    let v = generate(&spec, *horizon)?;
                    play(
                        config,
                        alpha,
                        g,
                        Some(spec.seed),
                        predictor_seed,
                        &v,
                        &replays,
                    )
                }
                (None, _) => unreachable!("non-generator inputs are loaded up front"),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let p: Vec<f64> = games.iter().map(|g| g.p_alpha).collect();
    let (mean_p_alpha, p_alpha_stderr) = mean_and_stderr(&p);
    let algorithms = config
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let payoffs: Vec<f64> = games.iter().map(|g| g.results[k].payoff).collect();
            let slacks: Vec<f64> = games.iter().map(|g| g.results[k].slack).collect();
            let (mean_payoff, stderr) = mean_and_stderr(&payoffs);
            AlgorithmSummary {
                algorithm: a.to_string(),
                mean_payoff,
                stderr,
                total_clamps: games.iter().map(|g| g.results[k].clamp_count).sum(),
                mean_slack: mean_and_stderr(&slacks).0,
                min_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    let mut echo = config.clone();
    echo.seed = Some(seed);
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed,
        config: echo,
        mean_p_alpha,
        p_alpha_stderr,
        algorithms,
        games,
        clip_count,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
