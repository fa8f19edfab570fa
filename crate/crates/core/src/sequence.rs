//! Sequences, intervals, heights and the dyadic ("aligned") interval structure.
//!
//! Externally every index is 1-based and inclusive: the interval `[i, j]`
//! covers positions `i..=j` of a sequence of length `T`. Internally slices are
//! 0-based; the conversion happens at the `Interval` boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sequence {
    values: Vec<f64>,
}

impl Sequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || v.abs() > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "value {v} at position {} is outside [-1, 1]",
                    i + 1
                )));
            }
        }
        Ok(Self { values })
    }

    /// Builds a ±1 sequence from booleans (`true` is `+1`).
    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self {
            values: bits
                .into_iter()
                .map(|b| if b { 1.0 } else { -1.0 })
                .collect(),
        }
    }

    /// Parses the one-value-per-line text format. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let values = parse_lines(text, |v| {
            (v.abs() <= 1.0)
                .then_some(())
                .ok_or_else(|| format!("value {v} is outside [-1, 1]"))
        })?;
        Ok(Self { values })
    }

    /// Renders the text format, writing `+1`/`-1` for bits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 3);
        for v in &self.values {
            if *v == 1.0 {
                out.push_str("+1\n");
            } else if *v == -1.0 {
                out.push_str("-1\n");
            } else {
                out.push_str(&format!("{v}\n"));
            }
        }
        out
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The sequence with every value negated.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Whole-sequence height `h([1, T])`.
    pub fn height(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Parses the text format without the `[-1, 1]` restriction, for real-valued
/// inputs whose magnitudes may exceed one.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    parse_lines(text, |_| Ok(()))
}

/// Renders arbitrary finite values in the text format.
pub fn values_to_text(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

fn parse_lines(
    text: &str,
    check: impl Fn(f64) -> std::result::Result<(), String>,
) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("cannot parse {line:?} as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("value {v} is not finite"),
            });
        }
        check(v).map_err(|message| Error::Parse {
            line: lineno + 1,
            message,
        })?;
        values.push(v);
    }
    Ok(values)
}

impl TryFrom<Vec<f64>> for Sequence {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Sequence> for Vec<f64> {
    fn from(seq: Sequence) -> Self {
        seq.values
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Closed interval `[start, end]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || start > end {
            return Err(Error::OutOfRange(format!(
                "[{start}, {end}] is not a valid interval"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based half-open range covering the same positions.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }

    fn check_within(&self, horizon: usize) -> Result<()> {
        if self.start == 0 || self.start > self.end || self.end > horizon {
            return Err(Error::OutOfRange(format!(
                "{self} is not within [1, {horizon}]"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Ordered list of contiguous, disjoint intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    intervals: Vec<Interval>,
}

impl Partition {
    /// Validates that `intervals` are contiguous and ordered.
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        for pair in intervals.windows(2) {
            if pair[1].start != pair[0].end + 1 {
                return Err(Error::InvalidInput(format!(
                    "intervals {} and {} are not contiguous",
                    pair[0], pair[1]
                )));
            }
        }
        for iv in &intervals {
            if iv.start == 0 || iv.start > iv.end {
                return Err(Error::InvalidInput(format!("{iv} is not a valid interval")));
            }
        }
        Ok(Self { intervals })
    }

    /// Builds a partition of `[1, horizon]` from the sorted 1-based end
    /// positions of every piece but the last.
    pub fn from_cuts(cuts: &[usize], horizon: usize) -> Result<Self> {
        let mut intervals = Vec::with_capacity(cuts.len() + 1);
        let mut start = 1;
        for &c in cuts.iter().chain(std::iter::once(&horizon)) {
            intervals.push(Interval::new(start, c)?);
            start = c + 1;
        }
        Self::new(intervals)
    }

    pub fn single(horizon: usize) -> Self {
        Self {
            intervals: vec![Interval {
                start: 1,
                end: horizon,
            }],
        }
    }

    pub fn singletons(horizon: usize) -> Self {
        Self {
            intervals: (1..=horizon)
                .map(|i| Interval { start: i, end: i })
                .collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Errors unless the partition covers exactly `[1, horizon]`.
    pub fn check_covers(&self, horizon: usize) -> Result<()> {
        self.check_covers_interval(
            Interval {
                start: 1,
                end: horizon,
            },
            horizon,
        )
    }

    fn check_covers_interval(&self, target: Interval, horizon: usize) -> Result<()> {
        let (Some(first), Some(last)) = (self.intervals.first(), self.intervals.last()) else {
            return if horizon == 0 {
                Ok(())
            } else {
                Err(Error::InvalidInput("empty partition".into()))
            };
        };
        if first.start != target.start || last.end != target.end {
            return Err(Error::InvalidInput(format!(
                "partition spans [{}, {}] but must cover {target}",
                first.start, last.end
            )));
        }
        for pair in self.intervals.windows(2) {
            if pair[1].start != pair[0].end + 1 {
                return Err(Error::InvalidInput(format!(
                    "intervals {} and {} are not contiguous",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }

    /// `start:end` pairs, one per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for iv in &self.intervals {
            out.push_str(&format!("{}:{}\n", iv.start, iv.end));
        }
        out
    }
}

/// Cumulative sums `c_0 = 0, c_i = c_{i-1} + v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixSums {
    sums: Vec<f64>,
}

impl PrefixSums {
    pub fn build(values: &[f64]) -> Self {
        let mut sums = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        sums.push(acc);
        for v in values {
            acc += v;
            sums.push(acc);
        }
        Self { sums }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sums
    }

    /// Sequence length `T`.
    pub fn horizon(&self) -> usize {
        self.sums.len() - 1
    }

    /// `h([start, end]) = c_end - c_{start-1}`.
    pub fn height(&self, iv: Interval) -> Result<f64> {
        iv.check_within(self.horizon())?;
        Ok(self.sums[iv.end] - self.sums[iv.start - 1])
    }

    /// Height of the 0-based half-open range `lo..hi`.
    #[inline]
    pub(crate) fn span(&self, lo: usize, hi: usize) -> f64 {
        self.sums[hi] - self.sums[lo]
    }
}

/// Convenience wrapper over [`PrefixSums::build`].
pub fn build_prefix_sums(seq: &Sequence) -> PrefixSums {
    PrefixSums::build(seq.values())
}

/// Convenience wrapper over [`PrefixSums::height`].
pub fn height(ps: &PrefixSums, iv: Interval) -> Result<f64> {
    ps.height(iv)
}

fn require_power_of_two(horizon: usize) -> Result<()> {
    if horizon == 0 || !horizon.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(horizon));
    }
    Ok(())
}

/// Whether `iv` is one of the dyadic blocks obtained by halving `[1, T]`.
pub fn is_aligned(iv: Interval, horizon: usize) -> Result<bool> {
    require_power_of_two(horizon)?;
    iv.check_within(horizon)?;
    let len = iv.len();
    Ok(len.is_power_of_two() && (iv.start - 1).is_multiple_of(len))
}

/// Minimal split of `iv` into aligned blocks, left to right.
///
/// At every position the largest aligned block that starts there and stays
/// inside `iv` is taken. Aligned blocks form a laminar family, so this
/// matches repeatedly removing the largest aligned block contained in `iv`.
pub fn aligned_decompose(iv: Interval, horizon: usize) -> Result<Partition> {
    require_power_of_two(horizon)?;
    iv.check_within(horizon)?;
    let mut pieces = Vec::new();
    let mut offset = iv.start - 1;
    while offset < iv.end {
        let remaining = iv.end - offset;
        // Largest power of two dividing the offset (any size when offset = 0).
        let by_alignment = if offset == 0 {
            horizon
        } else {
            1 << offset.trailing_zeros()
        };
        let by_room = 1 << (usize::BITS - 1 - remaining.leading_zeros());
        let size = by_alignment.min(by_room);
        pieces.push(Interval {
            start: offset + 1,
            end: offset + size,
        });
        offset += size;
    }
    Ok(Partition::from_sorted_unchecked(pieces))
}

/// `√2 / (√2 − 1)`, the loss factor when replacing an interval by aligned blocks.
pub fn alignment_constant() -> f64 {
    std::f64::consts::SQRT_2 / (std::f64::consts::SQRT_2 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: usize, b: usize) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn prefix_sums_examples() {
        assert_eq!(
            PrefixSums::build(&[1.0; 4]).as_slice(),
            &[0.0, 1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(PrefixSums::build(&[]).as_slice(), &[0.0]);
        assert_eq!(
            PrefixSums::build(&[1.0, -1.0, 1.0]).as_slice(),
            &[0.0, 1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn height_examples() {
        let ones = PrefixSums::build(&[1.0; 4]);
        assert_eq!(ones.height(iv(1, 4)).unwrap(), 4.0);
        let alt = PrefixSums::build(&[1.0, -1.0, 1.0]);
        assert_eq!(alt.height(iv(2, 2)).unwrap(), -1.0);
        assert_eq!(alt.height(iv(1, 3)).unwrap(), 1.0);
        assert!(matches!(alt.height(iv(2, 4)), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn aligned_examples() {
        assert!(is_aligned(iv(1, 8), 8).unwrap());
        assert!(is_aligned(iv(3, 4), 8).unwrap());
        assert!(!is_aligned(iv(2, 3), 8).unwrap());
        assert!(!is_aligned(iv(1, 3), 8).unwrap());
        assert!(matches!(
            is_aligned(iv(1, 3), 6),
            Err(Error::NotPowerOfTwo(6))
        ));
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(
            aligned_decompose(iv(1, 8), 8).unwrap().intervals(),
            &[iv(1, 8)]
        );
        assert_eq!(
            aligned_decompose(iv(3, 6), 8).unwrap().intervals(),
            &[iv(3, 4), iv(5, 6)]
        );
        assert_eq!(
            aligned_decompose(iv(2, 8), 8).unwrap().intervals(),
            &[iv(2, 2), iv(3, 4), iv(5, 8)]
        );
        assert!(aligned_decompose(iv(1, 9), 8).is_err());
        assert!(aligned_decompose(iv(1, 3), 12).is_err());
    }

    #[test]
    fn middle_half_splits_in_two() {
        for m in 2..=10 {
            let t = 1usize << m;
            let p = aligned_decompose(iv(t / 4 + 1, 3 * t / 4), t).unwrap();
            assert_eq!(
                p.intervals(),
                &[iv(t / 4 + 1, t / 2), iv(t / 2 + 1, 3 * t / 4)]
            );
        }
    }

    #[test]
    fn decomposition_is_exact_cover_of_aligned_pieces() {
        let t = 64;
        for a in 1..=t {
            for b in a..=t {
                let p = aligned_decompose(iv(a, b), t).unwrap();
                p.check_covers_interval(iv(a, b), t).unwrap();
                for piece in p.intervals() {
                    assert!(is_aligned(*piece, t).unwrap());
                }
                // Minimal: no two consecutive pieces merge into an aligned block.
                for pair in p.intervals().windows(2) {
                    let merged = iv(pair[0].start, pair[1].end);
                    assert!(!is_aligned(merged, t).unwrap());
                }
            }
        }
    }

    #[test]
    fn sqrt_length_bound_holds_for_all_intervals_t256() {
        let c = alignment_constant();
        let t = 256;
        for a in 1..=t {
            for b in a..=t {
                let p = aligned_decompose(iv(a, b), t).unwrap();
                let total: f64 = p.intervals().iter().map(|y| (y.len() as f64).sqrt()).sum();
                assert!(total <= c * ((b - a + 1) as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn parse_text_format() {
        let seq = Sequence::parse("+1\n-1\n1\n\n# comment\n0.25\n-0.5\n").unwrap();
        assert_eq!(seq.values(), &[1.0, -1.0, 1.0, 0.25, -0.5]);
        assert!(matches!(
            Sequence::parse("1\n2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Sequence::parse("1\nx\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        let round = Sequence::parse(&seq.to_text()).unwrap();
        assert_eq!(round, seq);
    }

    #[test]
    fn sequence_rejects_out_of_range() {
        assert!(Sequence::new(vec![0.5, 1.5]).is_err());
        assert!(Sequence::new(vec![f64::NAN]).is_err());
        assert!(Sequence::new(vec![]).unwrap().is_empty());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![iv(1, 2), iv(4, 5)]).is_err());
        let p = Partition::from_cuts(&[2, 3], 5).unwrap();
        assert_eq!(p.intervals(), &[iv(1, 2), iv(3, 3), iv(4, 5)]);
        p.check_covers(5).unwrap();
        assert!(p.check_covers(6).is_err());
        assert_eq!(p.to_lines(), "1:2\n3:3\n4:5\n");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn height_is_additive(values in prop::collection::vec(-1.0f64..=1.0, 3..60), cuts in any::<(u16, u16, u16)>()) {
                let ps = PrefixSums::build(&values);
                let t = values.len();
                let mut idx = [cuts.0 as usize % t + 1, cuts.1 as usize % t + 1, cuts.2 as usize % t + 1];
                idx.sort_unstable();
                let (i, j, k) = (idx[0], idx[1], idx[2]);
                prop_assume!(j < k);
                let whole = ps.height(iv(i, k)).unwrap();
                let split = ps.height(iv(i, j)).unwrap() + ps.height(iv(j + 1, k)).unwrap();
                prop_assert!((whole - split).abs() <= 1e-12);
            }
        }
    }
}
