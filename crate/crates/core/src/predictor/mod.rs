//! Cover-style predictors for the interval payoff.
//!
//! At step `t` (bits `s = b_1..b_t` seen so far) every predictor bets
//!
//! ```text
//! b̃ = (E_U[P_α(s·(+1)·U)] − E_U[P_α(s·(−1)·U)]) / 2
//! ```
//!
//! where `U` is a uniform completion to length `T`. [`ExactPredictor`]
//! enumerates every completion; [`PredictorState`] draws one completion per
//! step in advance and stitches the observed prefix to it, either over all
//! partitions (`O(T²)` per step) or over aligned blocks only (`O(log T)` per
//! step). Real-valued completions with random magnitudes cover the
//! semi-adversarial setting.

mod exact;
mod magnitude;
mod state;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::{exact_completion_means, exact_predict_step, ExactPredictor, EXACT_LIMIT};
pub use magnitude::MagnitudeModel;
pub use state::{aligned_precompute, mc_precompute, real_precompute, Completion, PredictorState};

/// Which benchmark and machinery a predictor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Full enumeration of completions.
    Exact,
    /// One precomputed random completion per step, all partitions.
    #[serde(rename = "mc")]
    MonteCarlo,
    /// One precomputed random completion per step, aligned partitions only.
    #[serde(rename = "aligned")]
    AlignedFast,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" | "montecarlo" => Ok(Mode::MonteCarlo),
            "aligned" | "aligned-fast" => Ok(Mode::AlignedFast),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

/// A bet in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Whether the raw value had to be clamped into `[-1, 1]`.
    pub clamped: bool,
}

impl Prediction {
    /// Clamps `raw` into `[-1, 1]`. Excursions below `1e-9` are rounding
    /// and do not count as clamp events.
    pub fn clamp(raw: f64) -> Self {
        if raw.abs() <= 1.0 {
            Self {
                value: raw,
                clamped: false,
            }
        } else {
            Self {
                value: raw.clamp(-1.0, 1.0),
                clamped: raw.abs() > 1.0 + 1e-9,
            }
        }
    }
}

/// An online bettor: asked for a prediction, then shown the true value.
pub trait Predictor {
    fn horizon(&self) -> usize;

    /// Bet for the next step.
    fn predict(&mut self) -> Result<Prediction>;

    /// Reveal the value of the step just predicted.
    fn observe(&mut self, value: f64) -> Result<()>;

    fn clamp_count(&self) -> usize {
        0
    }
}

/// One row of a prediction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub observed_bit: f64,
    pub prediction: f64,
    pub cumulative_payoff: f64,
    #[serde(with = "bool_as_int")]
    pub clamped: bool,
}

/// Outcome of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRecord {
    /// `A_T = Σ_t b_t·b̃_t`.
    pub payoff: f64,
    pub steps: Vec<StepRecord>,
    pub clamp_count: usize,
}

/// Plays `predictor` against `values`.
///
/// Each prediction is recorded before the corresponding value is revealed.
pub fn run_game<P: Predictor + ?Sized>(predictor: &mut P, values: &[f64]) -> Result<GameRecord> {
    if predictor.horizon() != values.len() {
        return Err(Error::InvalidInput(format!(
            "predictor horizon {} does not match sequence length {}",
            predictor.horizon(),
            values.len()
        )));
    }
    let mut payoff = 0.0;
    let mut steps = Vec::with_capacity(values.len());
    for (k, &b) in values.iter().enumerate() {
        let p = predictor.predict()?;
        payoff += b * p.value;
        steps.push(StepRecord {
            step: k + 1,
            observed_bit: b,
            prediction: p.value,
            cumulative_payoff: payoff,
            clamped: p.clamped,
        });
        predictor.observe(b)?;
    }
    Ok(GameRecord {
        payoff,
        steps,
        clamp_count: predictor.clamp_count(),
    })
}

pub(crate) mod bool_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!(
                "expected 0 or 1, got {other}"
            ))),
        }
    }
}
