use super::{Prediction, Predictor};
use crate::error::{Error, Result};
use crate::payoff::{extend_prefix_best, prefix_payoffs, Alpha};

/// Largest horizon the exact predictor will enumerate.
pub const EXACT_LIMIT: usize = 16;

/// `(E_U[P_α(s·(+1)·U)], E_U[P_α(s·(−1)·U)])` over all ±1 completions `U`
/// of length `horizon − |s| − 1`.
pub fn exact_completion_means(s: &[f64], horizon: usize, alpha: Alpha) -> Result<(f64, f64)> {
    if horizon > EXACT_LIMIT {
        return Err(Error::TooLarge {
            what: "exact prediction",
            len: horizon,
            limit: EXACT_LIMIT,
        });
    }
    let t = s.len();
    if t >= horizon {
        return Err(Error::OutOfRange(format!(
            "prefix of length {t} leaves no step in horizon {horizon}"
        )));
    }
    let free = horizon - t - 1;
    let pen = alpha.penalties(horizon);

    let mut best = prefix_payoffs(s, alpha);
    best.resize(horizon + 1, 0.0);
    let mut sums = Vec::with_capacity(horizon + 1);
    sums.push(0.0);
    for v in s {
        sums.push(sums.last().copied().unwrap_or(0.0) + v);
    }
    sums.resize(horizon + 1, 0.0);

    let mut means = [0.0, 0.0];
    for (slot, b) in [1.0, -1.0].into_iter().enumerate() {
        let mut total = 0.0;
        for mask in 0u32..(1u32 << free) {
            let mut acc = sums[t] + b;
            sums[t + 1] = acc;
            best[t + 1] = extend_prefix_best(&best, &sums, &pen, t + 1);
            for k in 0..free {
                acc += if mask & (1 << k) != 0 { 1.0 } else { -1.0 };
                let p = t + 2 + k;
                sums[p] = acc;
                best[p] = extend_prefix_best(&best, &sums, &pen, p);
            }
            total += best[horizon];
        }
        means[slot] = total / f64::from(1u32 << free);
    }
    Ok((means[0], means[1]))
}

/// Exact Cover bet after prefix `s` at horizon `horizon`.
pub fn exact_predict_step(s: &[f64], alpha: Alpha, horizon: usize) -> Result<Prediction> {
    let (plus, minus) = exact_completion_means(s, horizon, alpha)?;
    Ok(Prediction::clamp((plus - minus) / 2.0))
}

/// Cover's predictor with exact expectations, for horizons up to
/// [`EXACT_LIMIT`].
#[derive(Debug, Clone)]
pub struct ExactPredictor {
    horizon: usize,
    alpha: Alpha,
    observed: Vec<f64>,
    clamp_count: usize,
}

impl ExactPredictor {
    pub fn new(horizon: usize, alpha: Alpha) -> Result<Self> {
        if horizon == 0 || horizon > EXACT_LIMIT {
            return Err(Error::TooLarge {
                what: "exact prediction",
                len: horizon,
                limit: EXACT_LIMIT,
            });
        }
        Ok(Self {
            horizon,
            alpha,
            observed: Vec::with_capacity(horizon),
            clamp_count: 0,
        })
    }
}

impl Predictor for ExactPredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&mut self) -> Result<Prediction> {
        let p = exact_predict_step(&self.observed, self.alpha, self.horizon)?;
        if p.clamped {
            self.clamp_count += 1;
        }
        Ok(p)
    }

    fn observe(&mut self, value: f64) -> Result<()> {
        if self.observed.len() >= self.horizon {
            return Err(Error::OutOfRange("game already finished".into()));
        }
        self.observed.push(value);
        Ok(())
    }

    fn clamp_count(&self) -> usize {
        self.clamp_count
    }
}
