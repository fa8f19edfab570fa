//! Estimating `α₀(T)`, the smallest `α` whose interval payoff is feasible at
//! horizon `T`.
//!
//! Feasibility holds exactly when the mean of `P_α` over uniform ±1 sequences
//! is at most zero. For `T ≤ 16` the mean is enumerated; beyond that it is
//! estimated from `n` sampled sequences with standard error `sd/√n`.
//!
//! The same sample is reused for every `α` probed (common random numbers).
//! `P_α` is non-increasing in `α` sequence by sequence, so the sample mean is
//! too, and bisection on its sign is deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::payoff::{aligned_payoff_value, Alpha};
use crate::rng;

/// Largest horizon enumerated exactly.
pub const EXACT_CALIBRATION_LIMIT: usize = 16;

/// Default bisection bracket.
pub const DEFAULT_BRACKET: (f64, f64) = (0.5, 10.0);

/// Two-sided 95% normal quantile used for confidence intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// Mean of `P_α` over a set of sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    /// Sample standard deviation (population deviation for exact enumeration).
    pub sd: f64,
    /// `sd/√n` for samples, zero for exact enumeration.
    pub stderr: f64,
    pub n: usize,
}

/// A fixed set of ±1 sequences, stored as prefix sums.
#[derive(Debug, Clone)]
pub struct SequenceSample {
    horizon: usize,
    sums: Vec<Vec<f64>>,
    exhaustive: bool,
}

impl SequenceSample {
    /// `n` uniform sequences; sequence `i` comes from stream `i` of `seed`.
    pub fn uniform(horizon: usize, n: usize, seed: u64) -> Self {
        let sums = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut r = rng::stream(seed, i as u64);
                let mut s = Vec::with_capacity(horizon + 1);
                s.push(0.0);
                let mut acc = 0.0;
                for _ in 0..horizon {
                    acc += rng::sign(&mut r);
                    s.push(acc);
                }
                s
            })
            .collect();
        Self {
            horizon,
            sums,
            exhaustive: false,
        }
    }

    /// All `2^T` sequences.
    pub fn exhaustive(horizon: usize) -> Result<Self> {
        if horizon > EXACT_CALIBRATION_LIMIT {
            return Err(Error::TooLarge {
                what: "exact enumeration",
                len: horizon,
                limit: EXACT_CALIBRATION_LIMIT,
            });
        }
        let sums = (0u32..1 << horizon)
            .map(|mask| {
                let mut s = Vec::with_capacity(horizon + 1);
                s.push(0.0);
                let mut acc = 0.0;
                for k in 0..horizon {
                    acc += if mask & (1 << k) != 0 { 1.0 } else { -1.0 };
                    s.push(acc);
                }
                s
            })
            .collect();
        Ok(Self {
            horizon,
            sums,
            exhaustive: true,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// `P_α` (or the aligned variant) of every sequence, in sample order.
    pub fn payoffs(&self, alpha: Alpha, aligned: bool) -> Result<Vec<f64>> {
        if aligned && !self.horizon.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(self.horizon));
        }
        let pen = alpha.penalties(self.horizon);
        Ok(self
            .sums
            .par_iter()
            .map_init(Vec::new, |scratch, sums| {
                if aligned {
                    let values: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
                    aligned_payoff_value(&values, alpha)
                        .expect("power-of-two horizon checked above")
                } else {
                    payoff_from_sums(sums, &pen, scratch)
                }
            })
            .collect())
    }

    /// Mean and spread of the payoffs. Summation runs in sample order, so the
    /// result does not depend on scheduling.
    pub fn evaluate(&self, alpha: Alpha, aligned: bool) -> Result<MeanEstimate> {
        let p = self.payoffs(alpha, aligned)?;
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty sample".into()));
        }
        let mean = p.iter().sum::<f64>() / n as f64;
        let ss: f64 = p.iter().map(|x| (x - mean).powi(2)).sum();
        if self.exhaustive {
            Ok(MeanEstimate {
                mean,
                sd: (ss / n as f64).sqrt(),
                stderr: 0.0,
                n,
            })
        } else {
            let sd = if n > 1 {
                (ss / (n as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            Ok(MeanEstimate {
                mean,
                sd,
                stderr: sd / (n as f64).sqrt(),
                n,
            })
        }
    }
}

// Prefix segmentation recurrence on precomputed sums.
fn payoff_from_sums(sums: &[f64], pen: &[f64], best: &mut Vec<f64>) -> f64 {
    let t = sums.len() - 1;
    best.clear();
    best.push(0.0);
    for p in 1..=t {
        let cp = sums[p];
        let mut m = f64::NEG_INFINITY;
        for q in 0..p {
            let v = best[q] + (cp - sums[q]).abs() - pen[p - q];
            if v > m {
                m = v;
            }
        }
        best.push(m);
    }
    best[t]
}

/// Exact mean of `P_α` (or the aligned variant) over all `2^T` sequences.
pub fn exact_mean_payoff(horizon: usize, alpha: Alpha, aligned: bool) -> Result<f64> {
    Ok(SequenceSample::exhaustive(horizon)?
        .evaluate(alpha, aligned)?
        .mean)
}

/// Monte Carlo mean of `P_α` over `n` uniform sequences.
pub fn mc_mean_payoff(
    horizon: usize,
    alpha: Alpha,
    n: usize,
    seed: u64,
    aligned: bool,
) -> Result<MeanEstimate> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    SequenceSample::uniform(horizon, n, seed).evaluate(alpha, aligned)
}

/// How to search over `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Search {
    /// Bisection until the bracket is at most `tolerance` wide.
    Bisect { tolerance: f64 },
    /// Evaluate every `α` on `lo, lo + step, …, hi`.
    Grid { lo: f64, hi: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub horizon: usize,
    /// Sample size; ignored when `exact` is set.
    pub n: usize,
    pub seed: u64,
    pub aligned: bool,
    /// Enumerate all sequences instead of sampling.
    pub exact: bool,
    pub search: Search,
    pub bracket: (f64, f64),
}

impl CalibrationConfig {
    pub fn bisect(horizon: usize, n: usize, seed: u64, tolerance: f64) -> Self {
        Self {
            horizon,
            n,
            seed,
            aligned: false,
            exact: false,
            search: Search::Bisect { tolerance },
            bracket: DEFAULT_BRACKET,
        }
    }

    pub fn exact_bisect(horizon: usize, tolerance: f64) -> Self {
        Self {
            exact: true,
            ..Self::bisect(horizon, 0, 0, tolerance)
        }
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.horizon == 0 {
            problems.push("horizon must be at least 1".to_string());
        }
        if !self.exact && self.n < 2 {
            problems.push(format!("sample size must be at least 2, got {}", self.n));
        }
        if self.exact && self.horizon > EXACT_CALIBRATION_LIMIT {
            problems.push(format!(
                "exact calibration is limited to horizon {EXACT_CALIBRATION_LIMIT}, got {}",
                self.horizon
            ));
        }
        if self.aligned && !self.horizon.is_power_of_two() {
            problems.push(format!(
                "aligned calibration needs a power-of-two horizon, got {}",
                self.horizon
            ));
        }
        let (lo, hi) = self.bracket;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            problems.push(format!("bracket [{lo}, {hi}] is invalid"));
        }
        match self.search {
            Search::Bisect { tolerance } if tolerance.is_nan() || tolerance <= 0.0 => {
                problems.push(format!("tolerance must be positive, got {tolerance}"))
            }
            Search::Grid { lo, hi, step } if !(lo > 0.0 && hi >= lo && step > 0.0) => {
                problems.push(format!("grid {lo}:{hi}:{step} is invalid"))
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// One evaluated `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub horizon: usize,
    /// `"exact"` or `"montecarlo"`.
    pub mode: String,
    pub aligned: bool,
    pub n: usize,
    pub seed: u64,
    pub search: Search,
    /// Every `α` evaluated, in evaluation order (grid order for grids).
    pub rows: Vec<AlphaRow>,
    /// Estimated `α₀(T)`.
    pub alpha0: f64,
    /// Final bracket around the root.
    pub bracket: (f64, f64),
    /// Standard error of the mean at `alpha0`.
    pub stderr_at_root: f64,
    /// Range of `α` where zero lies within 1.96 standard errors of the mean.
    pub confidence_interval: Option<(f64, f64)>,
}

impl CalibrationReport {
    /// `alpha,mean,stderr,n` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["alpha", "mean", "stderr", "n"])?;
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        for r in rows {
            w.write_record([
                r.alpha.to_string(),
                r.mean.to_string(),
                r.stderr.to_string(),
                r.n.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;

struct Evaluator<'a> {
    sample: &'a SequenceSample,
    aligned: bool,
    rows: Vec<AlphaRow>,
}

impl Evaluator<'_> {
    fn at(&mut self, alpha: f64) -> Result<MeanEstimate> {
        let est = self.sample.evaluate(Alpha::new(alpha)?, self.aligned)?;
        self.rows.push(AlphaRow {
            alpha,
            mean: est.mean,
            sd: est.sd,
            stderr: est.stderr,
            n: est.n,
        });
        Ok(est)
    }

    /// Root of `mean(α) + shift·stderr(α)` inside `[lo, hi]`, if it changes sign.
    fn root(
        &mut self,
        lo: f64,
        hi: f64,
        shift: f64,
        tolerance: f64,
    ) -> Result<Option<(f64, f64, f64)>> {
        let f = |e: MeanEstimate| e.mean + shift * e.stderr;
        let (mut lo, mut hi) = (lo, hi);
        let mut flo = f(self.at(lo)?);
        let mut fhi = f(self.at(hi)?);
        if !(flo > 0.0 && fhi <= 0.0) {
            return Ok(None);
        }
        while hi - lo > tolerance {
            let mid = 0.5 * (lo + hi);
            let fm = f(self.at(mid)?);
            if fm > 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        // The mean is piecewise linear in α; interpolate inside the last bracket.
        let root = if flo > fhi {
            lo + (hi - lo) * flo / (flo - fhi)
        } else {
            hi
        };
        Ok(Some((root, lo, hi)))
    }
}

/// Estimates `α₀(T)` by bisection or grid search on the sign of the mean.
pub fn estimate_alpha0(config: &CalibrationConfig) -> Result<CalibrationReport> {
    config.validate()?;
    let sample = if config.exact {
        SequenceSample::exhaustive(config.horizon)?
    } else {
        SequenceSample::uniform(config.horizon, config.n, config.seed)
    };
    let mut ev = Evaluator {
        sample: &sample,
        aligned: config.aligned,
        rows: Vec::new(),
    };
    let (blo, bhi) = config.bracket;
    let (alpha0, bracket) = match config.search {
        Search::Bisect { tolerance } => match ev.root(blo, bhi, 0.0, tolerance)? {
            Some((root, lo, hi)) => (root, (lo, hi)),
            None => return Err(bracket_error(&mut ev, blo, bhi)?),
        },
        Search::Grid { lo, hi, step } => {
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            let mut prev: Option<AlphaRow> = None;
            let mut found = None;
            for k in 0..count {
                let a = lo + step * k as f64;
                let est = ev.at(a)?;
                let row = *ev.rows.last().expect("just pushed");
                if let Some(p) = prev {
                    if found.is_none() && p.mean > 0.0 && est.mean <= 0.0 {
                        let root = p.alpha + (a - p.alpha) * p.mean / (p.mean - est.mean);
                        found = Some((root, (p.alpha, a)));
                    }
                }
                prev = Some(row);
            }
            match found {
                Some(f) => f,
                None => return Err(bracket_error(&mut ev, lo, lo + step * (count - 1) as f64)?),
            }
        }
    };
    let at_root = sample.evaluate(Alpha::new(alpha0)?, config.aligned)?;
    let confidence_interval = if sample.is_exhaustive() {
        Some((alpha0, alpha0))
    } else {
        let tol = match config.search {
            Search::Bisect { tolerance } => tolerance,
            Search::Grid { step, .. } => step / 16.0,
        };
        let mut ci_ev = Evaluator {
            sample: &sample,
            aligned: config.aligned,
            rows: Vec::new(),
        };
        let lower = ci_ev.root(blo, bhi, -Z95, tol)?;
        let upper = ci_ev.root(blo, bhi, Z95, tol)?;
        lower.zip(upper).map(|(l, u)| (l.0, u.0))
    };
    Ok(CalibrationReport {
        schema_version: CALIBRATION_SCHEMA_VERSION,
        horizon: config.horizon,
        mode: if config.exact { "exact" } else { "montecarlo" }.to_string(),
        aligned: config.aligned,
        n: sample.len(),
        seed: config.seed,
        search: config.search,
        rows: ev.rows,
        alpha0,
        bracket,
        stderr_at_root: at_root.stderr,
        confidence_interval,
    })
}

fn bracket_error(ev: &mut Evaluator<'_>, lo: f64, hi: f64) -> Result<Error> {
    Ok(Error::Bracket {
        lo,
        hi,
        mean_lo: ev.at(lo)?.mean,
        mean_hi: ev.at(hi)?.mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoff::payoff_value;

    fn alpha(a: f64) -> Alpha {
        Alpha::new(a).unwrap()
    }

    #[test]
    fn horizon_one_mean_and_root() {
        assert!((exact_mean_payoff(1, alpha(0.3), false).unwrap() - 0.7).abs() < 1e-15);
        let r = estimate_alpha0(&CalibrationConfig::exact_bisect(1, 1e-6)).unwrap();
        assert!((r.alpha0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizon_two_worked_mean() {
        let a = 2.0;
        let pp = (2.0 - a * 2f64.sqrt()).max(2.0 * (1.0 - a));
        let pm = (-a * 2f64.sqrt()).max(2.0 * (1.0 - a));
        let expected = (2.0 * pp + 2.0 * pm) / 4.0;
        let got = exact_mean_payoff(2, alpha(a), false).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!(got <= 0.0);
    }

    #[test]
    fn exact_mean_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let m = exact_mean_payoff(10, alpha(0.1 * k as f64), false).unwrap();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn exact_mean_matches_direct_enumeration() {
        let t = 6;
        let mut total = 0.0;
        for mask in 0u32..1 << t {
            let v: Vec<f64> = (0..t)
                .map(|k| if mask & (1 << k) != 0 { 1.0 } else { -1.0 })
                .collect();
            total += payoff_value(&v, alpha(1.3));
        }
        let direct = total / 64.0;
        assert!((exact_mean_payoff(t, alpha(1.3), false).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn exact_bisection_finds_unique_root() {
        for t in [2usize, 5, 8, 12] {
            let r = estimate_alpha0(&CalibrationConfig::exact_bisect(t, 1e-6)).unwrap();
            let (lo, hi) = r.bracket;
            assert!(hi - lo <= 1e-6);
            assert!(lo <= r.alpha0 && r.alpha0 <= hi);
            assert!(exact_mean_payoff(t, alpha(lo), false).unwrap() > 0.0);
            assert!(exact_mean_payoff(t, alpha(hi), false).unwrap() <= 0.0);
            assert!((1.0..=10.0).contains(&r.alpha0));
        }
    }

    #[test]
    fn common_random_numbers_make_mean_monotone() {
        let sample = SequenceSample::uniform(50, 100, 3);
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let m = sample
                .evaluate(alpha(0.5 + 0.05 * k as f64), false)
                .unwrap()
                .mean;
            assert!(m <= prev);
            prev = m;
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = mc_mean_payoff(40, alpha(2.0), 50, 9, false).unwrap();
        let b = mc_mean_payoff(40, alpha(2.0), 50, 9, false).unwrap();
        assert_eq!(a, b);
        assert!(mc_mean_payoff(40, alpha(2.0), 1, 9, false).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_exact_t12() {
        let exact = exact_mean_payoff(12, alpha(1.5), false).unwrap();
        let mc = mc_mean_payoff(12, alpha(1.5), 20_000, 1, false).unwrap();
        assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr);
        let exact = exact_mean_payoff(8, alpha(1.5), true).unwrap();
        let mc = mc_mean_payoff(8, alpha(1.5), 20_000, 2, true).unwrap();
        assert!((mc.mean - exact).abs() <= 3.0 * mc.stderr);
    }

    #[test]
    fn aligned_feasibility_transfers_to_general() {
        let c = crate::sequence::alignment_constant();
        let mut checked = 0;
        for k in 1..=60 {
            let a = 0.1 * k as f64;
            if exact_mean_payoff(16, alpha(a), true).unwrap() <= 0.0 {
                assert!(exact_mean_payoff(16, alpha(c * a), false).unwrap() <= 0.0);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn bracket_must_straddle() {
        let mut cfg = CalibrationConfig::exact_bisect(4, 1e-3);
        cfg.bracket = (5.0, 10.0);
        assert!(matches!(estimate_alpha0(&cfg), Err(Error::Bracket { .. })));
    }

    #[test]
    fn grid_search_and_csv() {
        let cfg = CalibrationConfig {
            search: Search::Grid {
                lo: 1.0,
                hi: 3.0,
                step: 0.25,
            },
            ..CalibrationConfig::bisect(32, 200, 4, 1e-3)
        };
        let r = estimate_alpha0(&cfg).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r.bracket.0 <= r.alpha0 && r.alpha0 <= r.bracket.1);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("alpha,mean,stderr,n\n1,"));
        assert_eq!(csv.lines().count(), 10);
        let (lo, hi) = r.confidence_interval.unwrap();
        assert!(lo <= r.alpha0 && r.alpha0 <= hi);
    }

    #[test]
    fn invalid_configs_are_listed_together() {
        let cfg = CalibrationConfig {
            horizon: 24,
            n: 1,
            aligned: true,
            search: Search::Bisect { tolerance: 0.0 },
            ..CalibrationConfig::bisect(24, 1, 0, 1.0)
        };
        match estimate_alpha0(&cfg) {
            Err(Error::Config(list)) => assert_eq!(list.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
