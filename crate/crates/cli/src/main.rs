//! `interval-regret` command-line tool.
//!
//! Exit codes: 0 on success, 1 for invalid input or arguments, 2 for
//! runtime failures such as unreadable files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use interval_regret::baselines::{ConstantExpert, ExpertEnsemble};
use interval_regret::calibration::{estimate_alpha0, CalibrationConfig, Search, DEFAULT_BRACKET};
use interval_regret::harness::{
    generate, read_log, resolve_seed, run_experiment, score_log, write_log, ExperimentConfig,
    GeneratorKind, GeneratorSpec, SignPattern, SEED_ENV,
};
use interval_regret::payoff::{aligned_payoff_dp, aligned_payoff_value, payoff_dp, payoff_value};
use interval_regret::predictor::{
    run_game, ExactPredictor, MagnitudeModel, Mode, Predictor, PredictorState,
};
use interval_regret::sequence::{parse_values, values_to_text};
use interval_regret::{Alpha, Error, Result, Sequence};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "interval-regret",
    version,
    about = "Interval payoff, predictors and experiments for ±1 sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute P_α of a sequence and its maximizing partition.
    Payoff {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        input: PathBuf,
        /// Restrict to aligned (dyadic) partitions.
        #[arg(long)]
        aligned: bool,
    },
    /// Play the interval predictor against a sequence.
    Predict {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "mc")]
        mode: PredictMode,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        #[arg(long)]
        input: PathBuf,
        /// Prediction log CSV to write.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Magnitude model for `--mode real`: point-mass, half-normal or
        /// empirical:FILE.
        #[arg(long, default_value = "half-normal")]
        model: String,
    },
    /// Play a reference bettor against a sequence.
    Baseline {
        #[arg(long, value_enum)]
        algo: BaselineAlgo,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        /// Learning rate for `wm`; defaults to √(2 ln 2 / T).
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Estimate α₀(T).
    Calibrate {
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        #[arg(long)]
        aligned: bool,
        /// Enumerate all 2^T sequences instead of sampling.
        #[arg(long)]
        exact: bool,
        /// Evaluate a grid `lo:hi:step` instead of bisecting.
        #[arg(long, conflicts_with = "bisect")]
        alpha_grid: Option<String>,
        /// Bisection tolerance.
        #[arg(long)]
        bisect: Option<f64>,
        /// Per-α CSV output (alpha, mean, stderr, n).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a synthetic sequence.
    Generate {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        /// Value for `constant`.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        value: f64,
        #[arg(long)]
        block_len: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        /// Bias for `biased-blocks`.
        #[arg(long, default_value_t = 0.75)]
        bias: f64,
        /// Height constant for `low-height-blocks`.
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        /// Magnitude model for `real-signs-adversarial`.
        #[arg(long, default_value = "half-normal")]
        model: String,
        #[arg(long, value_enum, default_value = "all-positive")]
        signs: Signs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON config.
    Backtest {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// JSON report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-game CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Rescore a stored prediction log.
    ScoreLog {
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictMode {
    Exact,
    Mc,
    Aligned,
    Real,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineAlgo {
    Wm,
    #[value(name = "const+")]
    ConstPlus,
    #[value(name = "const-")]
    ConstMinus,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Uniform,
    Constant,
    Alternating,
    BiasedBlocks,
    LowHeightBlocks,
    RealSignsAdversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Signs {
    AllPositive,
    Alternating,
    Uniform,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn read_sequence(path: &Path) -> Result<Sequence> {
    Sequence::parse(&read_text(path)?)
}

fn parse_model(spec: &str) -> Result<MagnitudeModel> {
    match spec {
        "point-mass" | "point-mass-one" => Ok(MagnitudeModel::PointMassOne),
        "half-normal" | "half-normal-mean-one" => Ok(MagnitudeModel::HalfNormalMeanOne),
        other => match other.strip_prefix("empirical:") {
            Some(path) => MagnitudeModel::empirical_from_file(Path::new(path)),
            None => Err(Error::InvalidInput(format!(
                "unknown magnitude model {other:?}"
            ))),
        },
    }
}

fn parse_grid(text: &str) -> Result<Search> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("alpha grid {text:?} is not lo:hi:step")))?;
    match nums[..] {
        [lo, hi, step] => Ok(Search::Grid { lo, hi, step }),
        _ => Err(Error::InvalidInput(format!(
            "alpha grid {text:?} is not lo:hi:step"
        ))),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn write_game_log(
    path: Option<&PathBuf>,
    steps: &[interval_regret::predictor::StepRecord],
) -> Result<()> {
    if let Some(p) = path {
        write_log(fs::File::create(p)?, steps)?;
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Payoff {
            alpha,
            input,
            aligned,
        } => {
            let alpha = Alpha::new(alpha)?;
            let seq = read_sequence(&input)?;
            if seq.is_empty() {
                return Err(Error::InvalidInput("input sequence is empty".into()));
            }
            let (value, partition) = if aligned {
                aligned_payoff_dp(&seq, alpha)?
            } else {
                let sol = payoff_dp(&seq, alpha);
                (sol.value, sol.partition)
            };
            println!("{value}");
            print!("{}", partition.to_lines());
            let summary = json!({
                "value": value,
                "k": partition.len(),
                "alpha": alpha.get(),
                "T": seq.len(),
                "aligned": aligned,
            });
            println!("{summary}");
        }
        Command::Predict {
            alpha,
            mode,
            seed,
            input,
            log,
            model,
        } => {
            let alpha = Alpha::new(alpha)?;
            let seed = resolve_seed(seed)?;
            let values = match mode {
                PredictMode::Real => parse_values(&read_text(&input)?)?,
                _ => read_sequence(&input)?.into_values(),
            };
            let t = values.len();
            if t == 0 {
                return Err(Error::InvalidInput("input sequence is empty".into()));
            }
            let mut predictor: Box<dyn Predictor> = match mode {
                PredictMode::Exact => Box::new(ExactPredictor::new(t, alpha)?),
                PredictMode::Mc => Box::new(PredictorState::precompute(
                    t,
                    alpha,
                    Mode::MonteCarlo,
                    seed,
                    MagnitudeModel::PointMassOne,
                )?),
                PredictMode::Aligned => Box::new(PredictorState::precompute(
                    t,
                    alpha,
                    Mode::AlignedFast,
                    seed,
                    MagnitudeModel::PointMassOne,
                )?),
                PredictMode::Real => Box::new(PredictorState::precompute(
                    t,
                    alpha,
                    Mode::MonteCarlo,
                    seed,
                    parse_model(&model)?,
                )?),
            };
            let game = run_game(predictor.as_mut(), &values)?;
            write_game_log(log.as_ref(), &game.steps)?;
            let benchmark = match mode {
                PredictMode::Aligned => aligned_payoff_value(&values, alpha)?,
                _ => payoff_value(&values, alpha),
            };
            let summary = json!({
                "schema_version": 1,
                "mode": match mode {
                    PredictMode::Exact => "exact",
                    PredictMode::Mc => "mc",
                    PredictMode::Aligned => "aligned",
                    PredictMode::Real => "real",
                },
                "T": t,
                "alpha": alpha.get(),
                "seed": seed,
                "payoff": game.payoff,
                "benchmark": benchmark,
                "slack": game.payoff - benchmark,
                "clamp_count": game.clamp_count,
            });
            print!("{}", pretty(&summary)?);
        }
        Command::Baseline {
            algo,
            input,
            log,
            eta,
        } => {
            let seq = read_sequence(&input)?;
            let t = seq.len();
            let mut predictor: Box<dyn Predictor> = match algo {
                BaselineAlgo::Wm => Box::new(ExpertEnsemble::two_constant(
                    t,
                    eta.unwrap_or_else(|| ExpertEnsemble::default_eta(t)),
                )?),
                BaselineAlgo::ConstPlus => Box::new(ConstantExpert::new(t, 1.0)?),
                BaselineAlgo::ConstMinus => Box::new(ConstantExpert::new(t, -1.0)?),
            };
            let game = run_game(predictor.as_mut(), seq.values())?;
            write_game_log(log.as_ref(), &game.steps)?;
            let best = seq.height().abs();
            let summary = json!({
                "schema_version": 1,
                "algo": match algo {
                    BaselineAlgo::Wm => "wm",
                    BaselineAlgo::ConstPlus => "const+",
                    BaselineAlgo::ConstMinus => "const-",
                },
                "T": t,
                "payoff": game.payoff,
                "best_expert": best,
                "regret": best - game.payoff,
            });
            print!("{}", pretty(&summary)?);
        }
        Command::Calibrate {
            horizon,
            n,
            seed,
            aligned,
            exact,
            alpha_grid,
            bisect,
            csv,
            out,
        } => {
            let search = match (alpha_grid, bisect) {
                (Some(g), _) => parse_grid(&g)?,
                (None, Some(tol)) => Search::Bisect { tolerance: tol },
                (None, None) => Search::Bisect { tolerance: 1e-3 },
            };
            let config = CalibrationConfig {
                horizon,
                n,
                seed: resolve_seed(seed)?,
                aligned,
                exact,
                search,
                bracket: DEFAULT_BRACKET,
            };
            let report = estimate_alpha0(&config)?;
            if let Some(p) = csv {
                fs::write(p, report.to_csv()?)?;
            }
            write_or_print(out.as_deref(), &pretty(&report)?)?;
        }
        Command::Generate {
            kind,
            horizon,
            seed,
            value,
            block_len,
            count,
            bias,
            c,
            model,
            signs,
            output,
        } => {
            let blocks = || -> Result<(usize, usize)> {
                match (block_len, count) {
                    (Some(x), Some(k)) => Ok((x, k)),
                    (Some(x), None) if x > 0 => Ok((x, horizon / x)),
                    _ => Err(Error::InvalidInput(
                        "block generators need --block-len".into(),
                    )),
                }
            };
            let kind = match kind {
                GenKind::Uniform => GeneratorKind::Uniform,
                GenKind::Constant => GeneratorKind::Constant { value },
                GenKind::Alternating => GeneratorKind::Alternating,
                GenKind::BiasedBlocks => {
                    let (block_len, count) = blocks()?;
                    GeneratorKind::BiasedBlocks {
                        block_len,
                        bias,
                        count,
                    }
                }
                GenKind::LowHeightBlocks => {
                    let (block_len, count) = blocks()?;
                    GeneratorKind::LowHeightBlocks {
                        block_len,
                        c,
                        count,
                    }
                }
                GenKind::RealSignsAdversarial => GeneratorKind::RealSignsAdversarial {
                    model: parse_model(&model)?,
                    signs: match signs {
                        Signs::AllPositive => SignPattern::AllPositive,
                        Signs::Alternating => SignPattern::Alternating,
                        Signs::Uniform => SignPattern::Uniform,
                    },
                },
            };
            let spec = GeneratorSpec::new(kind, resolve_seed(seed)?);
            let values = generate(&spec, horizon)?;
            let text = match Sequence::new(values.clone()) {
                Ok(s) => s.to_text(),
                Err(_) => values_to_text(&values),
            };
            write_or_print(output.as_deref(), &text)?;
        }
        Command::Backtest {
            config,
            seed,
            out,
            csv,
        } => {
            let mut cfg = ExperimentConfig::from_json(&read_text(&config)?)?;
            if seed.is_some() {
                cfg.seed = seed;
            }
            let report = run_experiment(&cfg)?;
            if let Some(p) = csv {
                fs::write(p, report.to_csv()?)?;
            }
            write_or_print(out.as_deref(), &pretty(&report)?)?;
        }
        Command::ScoreLog { log } => {
            let steps = read_log(open(&log)?)?;
            print!("{}", pretty(&score_log(&steps))?);
        }
    }
    Ok(())
}
