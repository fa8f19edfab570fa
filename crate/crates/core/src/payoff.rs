//! The interval payoff function.
//!
//! For a sequence `X` and penalty `α`, the interval payoff is the maximum over
//! every partition `X_1, …, X_k` of `Σ_i (|h(X_i)| − α·√|X_i|)`. The aligned
//! variant restricts the partition to dyadic blocks of a power-of-two horizon.
//!
//! Three routes compute the same value:
//!
//! * [`payoff_dp`]: the full triangular table over every subinterval,
//!   `Θ(T³)` split comparisons, with a deterministic maximizing partition.
//! * [`payoff_value`] and friends: a prefix segmentation recurrence in
//!   `Θ(T²)`, used on every hot path (prediction, calibration).
//! * [`payoff_bruteforce_oracle`]: enumeration of all `2^(T−1)` compositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{Interval, Partition, PrefixSums, Sequence};

/// Penalty per square-root of interval length.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be positive and finite, got {value}"
            )));
        }
        Ok(Self(value))
    }

    /// Like [`Alpha::new`] but admits zero, which is only meaningful for
    /// diagnostics (pure height maximization).
    pub fn non_negative(value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be non-negative, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `α·√len` for `len = 0..=max_len`.
    pub(crate) fn penalties(self, max_len: usize) -> Vec<f64> {
        (0..=max_len)
            .map(|len| self.0 * (len as f64).sqrt())
            .collect()
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

const WHOLE: u32 = u32::MAX;

/// Interval payoff of every subinterval `[i, j]` of one sequence.
#[derive(Debug, Clone)]
pub struct PayoffTable {
    horizon: usize,
    alpha: Alpha,
    cells: Vec<f64>,
    // Chosen split: WHOLE, or the 0-based end index of the left part.
    split: Vec<u32>,
    split_comparisons: u64,
}

impl PayoffTable {
    #[inline]
    fn index(horizon: usize, i0: usize, d: usize) -> usize {
        // Row i0 starts after Σ_{r<i0} (T − r) cells.
        i0 * (2 * horizon + 1 - i0) / 2 + d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Payoff of `[i, j]` (1-based, inclusive).
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if i == 0 || i > j || j > self.horizon {
            return Err(Error::OutOfRange(format!(
                "[{i}, {j}] is not within [1, {}]",
                self.horizon
            )));
        }
        Ok(self.cell(i - 1, j - 1))
    }

    #[inline]
    fn cell(&self, i0: usize, j0: usize) -> f64 {
        self.cells[Self::index(self.horizon, i0, j0 - i0)]
    }

    /// Number of `dp[i][k] + dp[k+1][j]` candidates evaluated while filling.
    pub fn split_comparisons(&self) -> u64 {
        self.split_comparisons
    }

    fn backtrack(&self, i0: usize, j0: usize, out: &mut Vec<Interval>) {
        let s = self.split[Self::index(self.horizon, i0, j0 - i0)];
        if s == WHOLE {
            out.push(Interval {
                start: i0 + 1,
                end: j0 + 1,
            });
        } else {
            let k = s as usize;
            self.backtrack(i0, k, out);
            self.backtrack(k + 1, j0, out);
        }
    }
}

/// Result of [`payoff_dp`].
#[derive(Debug, Clone)]
pub struct PayoffSolution {
    pub value: f64,
    pub partition: Partition,
    pub table: PayoffTable,
}

/// Fills the triangular table over every subinterval and backtracks one
/// maximizing partition.
///
/// Ties prefer the whole interval over any split, then the split with the
/// smallest left part.
pub fn payoff_dp(seq: &Sequence, alpha: Alpha) -> PayoffSolution {
    payoff_dp_values(seq.values(), alpha)
}

pub(crate) fn payoff_dp_values(values: &[f64], alpha: Alpha) -> PayoffSolution {
    let t = values.len();
    let size = t * (t + 1) / 2;
    let mut table = PayoffTable {
        horizon: t,
        alpha,
        cells: vec![0.0; size],
        split: vec![WHOLE; size],
        split_comparisons: 0,
    };
    if t == 0 {
        return PayoffSolution {
            value: 0.0,
            partition: Partition::default(),
            table,
        };
    }
    let ps = PrefixSums::build(values);
    let pen = alpha.penalties(t);
    let mut comparisons = 0u64;
    for i0 in (0..t).rev() {
        for j0 in i0..t {
            let whole = ps.span(i0, j0 + 1).abs() - pen[j0 - i0 + 1];
            let mut best = whole;
            let mut choice = WHOLE;
            for k in i0..j0 {
                let cand = table.cell(i0, k) + table.cell(k + 1, j0);
                if cand > best {
                    best = cand;
                    choice = k as u32;
                }
            }
            comparisons += (j0 - i0) as u64;
            let idx = PayoffTable::index(t, i0, j0 - i0);
            table.cells[idx] = best;
            table.split[idx] = choice;
        }
    }
    table.split_comparisons = comparisons;
    let mut intervals = Vec::new();
    table.backtrack(0, t - 1, &mut intervals);
    PayoffSolution {
        value: table.cell(0, t - 1),
        partition: Partition::from_sorted_unchecked(intervals),
        table,
    }
}

/// Interval payoff via the prefix recurrence
/// `best(p) = max_{q<p} best(q) + |h(q+1..p)| − α√(p−q)`.
pub fn payoff_value(values: &[f64], alpha: Alpha) -> f64 {
    prefix_payoffs(values, alpha).last().copied().unwrap_or(0.0)
}

/// `out[p]` is the interval payoff of `values[..p]`; `out[0] = 0`.
pub fn prefix_payoffs(values: &[f64], alpha: Alpha) -> Vec<f64> {
    let t = values.len();
    let pen = alpha.penalties(t);
    let ps = PrefixSums::build(values);
    let c = ps.as_slice();
    let mut best = Vec::with_capacity(t + 1);
    best.push(0.0);
    for p in 1..=t {
        best.push(extend_prefix_best(&best, c, &pen, p));
    }
    best
}

/// One step of the prefix recurrence: `best[p]` from `best[..p]`.
#[inline]
pub(crate) fn extend_prefix_best(best: &[f64], sums: &[f64], pen: &[f64], p: usize) -> f64 {
    let cp = sums[p];
    let mut m = f64::NEG_INFINITY;
    for q in 0..p {
        let v = best[q] + (cp - sums[q]).abs() - pen[p - q];
        if v > m {
            m = v;
        }
    }
    m
}

/// `out[q]` is the interval payoff of `values[q..]`; `out[len] = 0`.
pub fn suffix_payoffs(values: &[f64], alpha: Alpha) -> Vec<f64> {
    let t = values.len();
    let pen = alpha.penalties(t);
    let ps = PrefixSums::build(values);
    let c = ps.as_slice();
    let mut best = vec![0.0; t + 1];
    for q in (0..t).rev() {
        let cq = c[q];
        let mut m = f64::NEG_INFINITY;
        for p in q + 1..=t {
            let v = (c[p] - cq).abs() - pen[p - q] + best[p];
            if v > m {
                m = v;
            }
        }
        best[q] = m;
    }
    best
}

/// Interval payoff with one maximizing partition, in `Θ(T²)`.
///
/// Ties prefer the longest final interval. The value always equals
/// [`payoff_dp`]; the partition may differ from its golden tie-breaking.
pub fn optimal_segmentation(values: &[f64], alpha: Alpha) -> (f64, Partition) {
    let t = values.len();
    if t == 0 {
        return (0.0, Partition::default());
    }
    let pen = alpha.penalties(t);
    let ps = PrefixSums::build(values);
    let c = ps.as_slice();
    let mut best = vec![0.0; t + 1];
    let mut from = vec![0usize; t + 1];
    for p in 1..=t {
        let mut m = f64::NEG_INFINITY;
        for q in 0..p {
            let v = best[q] + (c[p] - c[q]).abs() - pen[p - q];
            if v > m {
                m = v;
                from[p] = q;
            }
        }
        best[p] = m;
    }
    let mut intervals = Vec::new();
    let mut p = t;
    while p > 0 {
        let q = from[p];
        intervals.push(Interval {
            start: q + 1,
            end: p,
        });
        p = q;
    }
    intervals.reverse();
    (best[t], Partition::from_sorted_unchecked(intervals))
}

/// Largest length the brute-force oracle accepts.
pub const BRUTEFORCE_LIMIT: usize = 20;

/// Exact maximum over all partitions, by enumerating split-point subsets.
pub fn payoff_bruteforce_oracle(seq: &Sequence, alpha: Alpha) -> Result<f64> {
    let values = seq.values();
    let t = values.len();
    if t > BRUTEFORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "brute-force payoff",
            len: t,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    if t == 0 {
        return Ok(0.0);
    }
    let a = alpha.get();
    let mut best = f64::NEG_INFINITY;
    // Bit k of `mask` set means a cut after position k + 1.
    for mask in 0u32..(1u32 << (t - 1)) {
        let mut total = 0.0;
        let mut height = 0.0;
        let mut len = 0usize;
        for (k, v) in values.iter().enumerate() {
            height += v;
            len += 1;
            if k == t - 1 || mask & (1 << k) != 0 {
                total += f64::abs(height) - a * (len as f64).sqrt();
                height = 0.0;
                len = 0;
            }
        }
        if total > best {
            best = total;
        }
    }
    Ok(best)
}

/// `Σ_i (|h(X_i)| − α√|X_i|)` for the given partition.
pub fn payoff_of_partition(seq: &Sequence, part: &Partition, alpha: Alpha) -> Result<f64> {
    part.check_covers(seq.len())?;
    let ps = PrefixSums::build(seq.values());
    let a = alpha.get();
    Ok(part
        .intervals()
        .iter()
        .map(|iv| ps.span(iv.start - 1, iv.end).abs() - a * (iv.len() as f64).sqrt())
        .sum())
}

/// Aligned interval payoff and a maximizing aligned partition.
///
/// Bottom-up over the dyadic tree: every block takes the better of itself
/// whole and its two halves. Ties keep the block whole.
pub fn aligned_payoff_dp(seq: &Sequence, alpha: Alpha) -> Result<(f64, Partition)> {
    let values = seq.values();
    let t = values.len();
    if t == 0 || !t.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(t));
    }
    let a = alpha.get();
    // levels[l][j]: (best payoff, height, kept whole) of block j at size 2^l.
    let mut levels: Vec<Vec<(f64, f64, bool)>> = Vec::new();
    levels.push(values.iter().map(|&v| (v.abs() - a, v, true)).collect());
    let mut size = 1usize;
    while size < t {
        size *= 2;
        let prev = levels.last().expect("level 0 exists");
        let pen = a * (size as f64).sqrt();
        let next: Vec<_> = prev
            .chunks_exact(2)
            .map(|pair| {
                let h = pair[0].1 + pair[1].1;
                let whole = h.abs() - pen;
                let split = pair[0].0 + pair[1].0;
                if whole >= split {
                    (whole, h, true)
                } else {
                    (split, h, false)
                }
            })
            .collect();
        levels.push(next);
    }
    let top = levels.len() - 1;
    let mut intervals = Vec::new();
    let mut stack = vec![(top, 0usize)];
    while let Some((l, j)) = stack.pop() {
        if l == 0 || levels[l][j].2 {
            let size = 1usize << l;
            intervals.push(Interval {
                start: j * size + 1,
                end: (j + 1) * size,
            });
        } else {
            stack.push((l - 1, 2 * j + 1));
            stack.push((l - 1, 2 * j));
        }
    }
    Ok((
        levels[top][0].0,
        Partition::from_sorted_unchecked(intervals),
    ))
}

/// Aligned interval payoff of a power-of-two-length slice.
pub fn aligned_payoff_value(values: &[f64], alpha: Alpha) -> Result<f64> {
    let t = values.len();
    if t == 0 || !t.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(t));
    }
    let a = alpha.get();
    let mut best: Vec<(f64, f64)> = values.iter().map(|&v| (v.abs() - a, v)).collect();
    let mut size = 1usize;
    while best.len() > 1 {
        size *= 2;
        let pen = a * (size as f64).sqrt();
        best = best
            .chunks_exact(2)
            .map(|p| {
                let h = p[0].1 + p[1].1;
                ((h.abs() - pen).max(p[0].0 + p[1].0), h)
            })
            .collect();
    }
    Ok(best[0].0)
}

/// Best aligned payoff of `[e+1, horizon]` for every boundary `e` in
/// `offset..=horizon`, given the values at positions `offset+1..=horizon`.
///
/// `out[e − offset]` is the value for boundary `e`; blocks are aligned with
/// respect to `horizon`, which must be a power of two.
pub fn aligned_suffix_payoffs(
    values: &[f64],
    offset: usize,
    horizon: usize,
    alpha: Alpha,
) -> Result<Vec<f64>> {
    if horizon == 0 || !horizon.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(horizon));
    }
    if offset + values.len() != horizon {
        return Err(Error::InvalidInput(format!(
            "{} values after offset {offset} do not reach horizon {horizon}",
            values.len()
        )));
    }
    let a = alpha.get();
    let ps = PrefixSums::build(values);
    let mut out = vec![0.0; values.len() + 1];
    for e in (offset..horizon).rev() {
        let max_size = if e == 0 {
            horizon
        } else {
            1 << e.trailing_zeros()
        };
        let mut m = f64::NEG_INFINITY;
        let mut size = 1usize;
        while size <= max_size && e + size <= horizon {
            let lo = e - offset;
            let h = ps.span(lo, lo + size);
            let v = h.abs() - a * (size as f64).sqrt() + out[lo + size];
            if v > m {
                m = v;
            }
            size *= 2;
        }
        out[e - offset] = m;
    }
    Ok(out)
}

/// Best aligned payoff of `[1, p]` for every `p` in `0..=len`.
///
/// A block ending at `p` has a power-of-two size dividing `p`, which makes it
/// aligned in every power-of-two horizon `≥ p`.
pub fn aligned_prefix_payoffs(values: &[f64], alpha: Alpha) -> Vec<f64> {
    let ps = PrefixSums::build(values);
    let mut best = Vec::with_capacity(values.len() + 1);
    best.push(0.0);
    for p in 1..=values.len() {
        best.push(extend_aligned_prefix_best(
            &best,
            ps.as_slice(),
            alpha.get(),
            p,
        ));
    }
    best
}

#[inline]
pub(crate) fn extend_aligned_prefix_best(best: &[f64], sums: &[f64], a: f64, p: usize) -> f64 {
    let max_size = 1usize << p.trailing_zeros();
    let mut m = f64::NEG_INFINITY;
    let mut size = 1usize;
    while size <= max_size {
        let v = best[p - size] + (sums[p] - sums[p - size]).abs() - a * (size as f64).sqrt();
        if v > m {
            m = v;
        }
        size *= 2;
    }
    m
}
