use rayon::prelude::*;

use super::{MagnitudeModel, Mode, Prediction, Predictor};
use crate::error::{Error, Result};
use crate::payoff::{
    aligned_suffix_payoffs, extend_aligned_prefix_best, extend_prefix_best, suffix_payoffs, Alpha,
};
use crate::rng::{self, MAGNITUDE_BASE};

/// The random completion drawn for one step `t` (0-based count of values
/// already seen).
///
/// `values` holds positions `t+2..=T`; position `t+1` is the inserted bet
/// target whose sign is tried both ways and whose magnitude is
/// `inserted_magnitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    inserted_magnitude: f64,
    values: Vec<f64>,
    // heights[k] = sum of values[..k]
    heights: Vec<f64>,
    // Monte Carlo: suffix[k] = P_α(values[k..]).
    // Aligned: suffix[k] = best aligned payoff of [t+1+k+1, T].
    suffix: Vec<f64>,
}

impl Completion {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inserted_magnitude(&self) -> f64 {
        self.inserted_magnitude
    }

    /// Height of every prefix of the completion, starting with the empty one.
    pub fn prefix_heights(&self) -> &[f64] {
        &self.heights
    }

    /// Payoff of every suffix, ending with the empty one.
    pub fn suffix_payoffs(&self) -> &[f64] {
        &self.suffix
    }
}

/// Precomputed completions plus the incremental data of the observed prefix.
///
/// One instance drives one game; clone a freshly precomputed state to replay
/// the same completions against several sequences.
#[derive(Debug, Clone)]
pub struct PredictorState {
    horizon: usize,
    alpha: Alpha,
    mode: Mode,
    seed: u64,
    model: MagnitudeModel,
    completions: Vec<Completion>,
    penalties: Vec<f64>,
    observed: Vec<f64>,
    sums: Vec<f64>,
    // P_α(s_1..i) in Monte Carlo mode, best aligned payoff of [1, i] otherwise.
    prefix_best: Vec<f64>,
    clamp_count: usize,
    last_candidates: usize,
}

/// Draws the completions for every step and precomputes, per completion, the
/// height of every prefix and the interval payoff of every suffix.
pub fn mc_precompute(horizon: usize, alpha: Alpha, seed: u64) -> Result<PredictorState> {
    PredictorState::precompute(
        horizon,
        alpha,
        Mode::MonteCarlo,
        seed,
        MagnitudeModel::PointMassOne,
    )
}

/// Like [`mc_precompute`], storing aligned suffix payoffs for the
/// `O(log T)` predictor. The horizon must be a power of two.
pub fn aligned_precompute(horizon: usize, alpha: Alpha, seed: u64) -> Result<PredictorState> {
    PredictorState::precompute(
        horizon,
        alpha,
        Mode::AlignedFast,
        seed,
        MagnitudeModel::PointMassOne,
    )
}

/// Monte Carlo state whose completions carry magnitudes drawn from `model`.
pub fn real_precompute(
    horizon: usize,
    alpha: Alpha,
    seed: u64,
    model: MagnitudeModel,
) -> Result<PredictorState> {
    PredictorState::precompute(horizon, alpha, Mode::MonteCarlo, seed, model)
}

impl PredictorState {
    pub fn precompute(
        horizon: usize,
        alpha: Alpha,
        mode: Mode,
        seed: u64,
        model: MagnitudeModel,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        match mode {
            Mode::Exact => {
                return Err(Error::InvalidInput(
                    "exact mode has no precomputation; use ExactPredictor".into(),
                ))
            }
            Mode::AlignedFast if !horizon.is_power_of_two() => {
                return Err(Error::NotPowerOfTwo(horizon))
            }
            _ => {}
        }
        let completions = (0..horizon)
            .into_par_iter()
            .with_min_len(8)
            .map(|t| draw_completion(horizon, alpha, mode, seed, &model, t))
            .collect::<Result<Vec<_>>>()?;
        let mut state = Self {
            horizon,
            alpha,
            mode,
            seed,
            model,
            completions,
            penalties: alpha.penalties(horizon),
            observed: Vec::with_capacity(horizon),
            sums: Vec::with_capacity(horizon + 1),
            prefix_best: Vec::with_capacity(horizon + 1),
            clamp_count: 0,
            last_candidates: 0,
        };
        state.reset();
        Ok(state)
    }

    /// Forgets the observed prefix; completions are kept.
    pub fn reset(&mut self) {
        self.observed.clear();
        self.sums.clear();
        self.sums.push(0.0);
        self.prefix_best.clear();
        self.prefix_best.push(0.0);
        self.clamp_count = 0;
        self.last_candidates = 0;
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &MagnitudeModel {
        &self.model
    }

    pub fn completion(&self, t: usize) -> Option<&Completion> {
        self.completions.get(t)
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn clamp_events(&self) -> usize {
        self.clamp_count
    }

    /// Number of crossing intervals examined by the last aligned prediction.
    pub fn last_candidate_count(&self) -> usize {
        self.last_candidates
    }

    /// Copy of a fresh state with every completion sign flipped.
    pub fn negated(&self) -> Result<Self> {
        if !self.observed.is_empty() {
            return Err(Error::InvalidInput(
                "can only negate a state before the game starts".into(),
            ));
        }
        let mut out = self.clone();
        for c in &mut out.completions {
            c.values.iter_mut().for_each(|v| *v = -*v);
            c.heights.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(out)
    }

    /// Appends one observed value, extending the prefix payoff table.
    pub fn push_observed(&mut self, value: f64) -> Result<()> {
        if self.observed.len() >= self.horizon {
            return Err(Error::OutOfRange("game already finished".into()));
        }
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "observed value {value} is not finite"
            )));
        }
        self.observed.push(value);
        let p = self.observed.len();
        self.sums.push(self.sums[p - 1] + value);
        let next = match self.mode {
            Mode::AlignedFast => {
                extend_aligned_prefix_best(&self.prefix_best, &self.sums, self.alpha.get(), p)
            }
            _ => extend_prefix_best(&self.prefix_best, &self.sums, &self.penalties, p),
        };
        self.prefix_best.push(next);
        Ok(())
    }

    /// Brings the incremental prefix data in line with `s`, extending when
    /// `s` continues the current prefix and rebuilding otherwise.
    fn sync(&mut self, s: &[f64]) -> Result<()> {
        if s.len() >= self.horizon {
            return Err(Error::OutOfRange(format!(
                "step {} is outside horizon {}",
                s.len(),
                self.horizon
            )));
        }
        if !s.starts_with(&self.observed) {
            let clamps = self.clamp_count;
            self.reset();
            self.clamp_count = clamps;
        }
        for &v in &s[self.observed.len()..] {
            self.push_observed(v)?;
        }
        Ok(())
    }

    /// `P_α(s·v·U_t)` for the current prefix `s` of length `t`, stitched from
    /// the prefix table and the completion's precomputed suffix payoffs.
    ///
    /// The crossing interval `[i+1, j−1]` contains position `t+1`; it is
    /// scored with a single absolute value over its whole height.
    pub fn stitched_payoff(&self, inserted: f64) -> Result<f64> {
        let t = self.observed.len();
        let comp = self
            .completions
            .get(t)
            .ok_or_else(|| Error::OutOfRange(format!("no completion for step {t}")))?;
        if self.mode != Mode::MonteCarlo {
            return Err(Error::InvalidInput(
                "stitched_payoff needs Monte Carlo mode".into(),
            ));
        }
        let ct = self.sums[t];
        let mut best = f64::NEG_INFINITY;
        for i in 0..=t {
            let left = self.prefix_best[i];
            let base = ct - self.sums[i] + inserted;
            for (k, (&h, &right)) in comp.heights.iter().zip(&comp.suffix).enumerate() {
                let v = left + right + (base + h).abs() - self.penalties[t - i + 1 + k];
                if v > best {
                    best = v;
                }
            }
        }
        Ok(best)
    }

    /// Aligned analogue of [`stitched_payoff`](Self::stitched_payoff): one
    /// candidate per aligned block containing position `t+1`.
    pub fn aligned_stitched_payoff(&self, inserted: f64) -> Result<(f64, usize)> {
        let t = self.observed.len();
        let comp = self
            .completions
            .get(t)
            .ok_or_else(|| Error::OutOfRange(format!("no completion for step {t}")))?;
        if self.mode != Mode::AlignedFast {
            return Err(Error::InvalidInput(
                "aligned_stitched_payoff needs aligned mode".into(),
            ));
        }
        let a = self.alpha.get();
        let ct = self.sums[t];
        let mut best = f64::NEG_INFINITY;
        let mut candidates = 0;
        let mut size = 1usize;
        while size <= self.horizon {
            let start = (t / size) * size;
            let end = start + size;
            let u_len = end - t - 1;
            let height = ct - self.sums[start] + inserted + comp.heights[u_len];
            let v = self.prefix_best[start] + height.abs() - a * (size as f64).sqrt()
                + comp.suffix[u_len];
            if v > best {
                best = v;
            }
            candidates += 1;
            size *= 2;
        }
        Ok((best, candidates))
    }

    fn predict_current(&mut self) -> Result<Prediction> {
        let t = self.observed.len();
        let m = self.completions[t].inserted_magnitude;
        let (up, down) = match self.mode {
            Mode::AlignedFast => {
                let (up, n) = self.aligned_stitched_payoff(m)?;
                let (down, _) = self.aligned_stitched_payoff(-m)?;
                self.last_candidates = n;
                (up, down)
            }
            _ => (self.stitched_payoff(m)?, self.stitched_payoff(-m)?),
        };
        // Dividing by the size-biased inserted magnitude makes the bet an
        // unbiased estimate of the model-averaged half-difference, and keeps
        // it within [-1, 1] since P_α is 1-Lipschitz in each value.
        let raw = if m > 0.0 {
            (up - down) / (2.0 * m)
        } else {
            0.0
        };
        let p = Prediction::clamp(raw);
        if p.clamped {
            self.clamp_count += 1;
        }
        Ok(p)
    }

    /// Monte Carlo bet after observing `s` (so `t = |s|`).
    pub fn mc_predict_step(&mut self, s: &[f64]) -> Result<Prediction> {
        if self.mode != Mode::MonteCarlo || !self.model.is_point_mass() {
            return Err(Error::InvalidInput(
                "state was not precomputed for Monte Carlo bits".into(),
            ));
        }
        self.sync(s)?;
        self.predict_current()
    }

    /// Aligned `O(log T)` bet after observing `s`.
    pub fn aligned_fast_predict_step(&mut self, s: &[f64]) -> Result<Prediction> {
        if self.mode != Mode::AlignedFast {
            return Err(Error::InvalidInput(
                "state was not precomputed for aligned prediction".into(),
            ));
        }
        self.sync(s)?;
        self.predict_current()
    }

    /// Semi-adversarial bet after observing real values `m`: completions
    /// carry random signs and magnitudes from the state's model.
    pub fn real_valued_predict_step(&mut self, m: &[f64]) -> Result<Prediction> {
        if self.mode != Mode::MonteCarlo {
            return Err(Error::InvalidInput(
                "real-valued prediction needs Monte Carlo mode".into(),
            ));
        }
        self.sync(m)?;
        self.predict_current()
    }
}

impl Predictor for PredictorState {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&mut self) -> Result<Prediction> {
        if self.observed.len() >= self.horizon {
            return Err(Error::OutOfRange("game already finished".into()));
        }
        self.predict_current()
    }

    fn observe(&mut self, value: f64) -> Result<()> {
        self.push_observed(value)
    }

    fn clamp_count(&self) -> usize {
        self.clamp_count
    }
}

fn draw_completion(
    horizon: usize,
    alpha: Alpha,
    mode: Mode,
    seed: u64,
    model: &MagnitudeModel,
    t: usize,
) -> Result<Completion> {
    let len = horizon - t - 1;
    let mut signs = rng::stream(seed, t as u64);
    let mut values: Vec<f64> = (0..len).map(|_| rng::sign(&mut signs)).collect();
    let mut inserted_magnitude = 1.0;
    if !model.is_point_mass() {
        let mut mags = rng::stream(seed, MAGNITUDE_BASE + t as u64);
        inserted_magnitude = model.sample_size_biased(&mut mags)?;
        for v in &mut values {
            *v *= model.sample(&mut mags)?;
        }
    }
    let mut heights = Vec::with_capacity(len + 1);
    heights.push(0.0);
    let mut acc = 0.0;
    for v in &values {
        acc += v;
        heights.push(acc);
    }
    let suffix = match mode {
        Mode::AlignedFast => aligned_suffix_payoffs(&values, t + 1, horizon, alpha)?,
        _ => suffix_payoffs(&values, alpha),
    };
    Ok(Completion {
        inserted_magnitude,
        values,
        heights,
        suffix,
    })
}
