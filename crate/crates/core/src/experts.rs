//! Reductions between the two-experts problem and bit prediction.
//!
//! Two experts with payoffs `b1_t, b2_t ∈ [0, 1]` map to the bit sequence
//! `b_t = (b1_t − b2_t)/2`; a bet `b̃_t` maps back to pulling the experts with
//! probabilities `((1+b̃_t)/2, (1−b̃_t)/2)`, and the experts payoff becomes
//! `(X_1 + X_2)/2 + A`. Doubling the sequence brings it to the standard
//! `[-1, 1]` range, which halves the effective penalty: `α` on the doubled
//! sequence corresponds to `α/2` per interval in the experts guarantee.
//!
//! With one-sided bets `b̃_t ∈ [0, 1]`, the sequence `b_t = b2_t − b1_t` and
//! probabilities `(1 − b̃_t, b̃_t)` give experts payoff `X_1 + Σ b̃_t·b_t`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Payoff streams of two experts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertsInstance {
    b1: Vec<f64>,
    b2: Vec<f64>,
}

impl ExpertsInstance {
    pub fn new(b1: Vec<f64>, b2: Vec<f64>) -> Result<Self> {
        if b1.len() != b2.len() {
            return Err(Error::InvalidInput(format!(
                "expert streams have lengths {} and {}",
                b1.len(),
                b2.len()
            )));
        }
        for (t, (x, y)) in b1.iter().zip(&b2).enumerate() {
            if !(0.0..=1.0).contains(x) || !(0.0..=1.0).contains(y) {
                return Err(Error::InvalidInput(format!(
                    "payoffs ({x}, {y}) at step {} are outside [0, 1]",
                    t + 1
                )));
            }
        }
        Ok(Self { b1, b2 })
    }

    pub fn horizon(&self) -> usize {
        self.b1.len()
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    /// Total payoff of each expert, `(X_1, X_2)`.
    pub fn totals(&self) -> (f64, f64) {
        (self.b1.iter().sum(), self.b2.iter().sum())
    }

    /// Reads the `t,b1,b2` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let (mut b1, mut b2) = (Vec::new(), Vec::new());
        for (row, rec) in rdr.deserialize::<InstanceRow>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: row + 2,
                message: e.to_string(),
            })?;
            if rec.t != row + 1 {
                return Err(Error::Parse {
                    line: row + 2,
                    message: format!("expected t = {}, found {}", row + 1, rec.t),
                });
            }
            b1.push(rec.b1);
            b2.push(rec.b2);
        }
        Self::new(b1, b2)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (t, (b1, b2)) in self.b1.iter().zip(&self.b2).enumerate() {
            w.serialize(InstanceRow {
                t: t + 1,
                b1: *b1,
                b2: *b2,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRow {
    t: usize,
    b1: f64,
    b2: f64,
}

/// One step of an arm-pulling policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmStep {
    pub p1: f64,
    pub p2: f64,
}

/// Arm probabilities per step; each step is a distribution over the two arms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmPolicy {
    steps: Vec<ArmStep>,
}

impl ArmPolicy {
    pub fn new(steps: Vec<ArmStep>) -> Result<Self> {
        for (t, s) in steps.iter().enumerate() {
            let valid = (0.0..=1.0).contains(&s.p1)
                && (0.0..=1.0).contains(&s.p2)
                && (s.p1 + s.p2 - 1.0).abs() <= 1e-12;
            if !valid {
                return Err(Error::InvalidInput(format!(
                    "step {} probabilities ({}, {}) are not a distribution",
                    t + 1,
                    s.p1,
                    s.p2
                )));
            }
        }
        Ok(Self { steps })
    }

    /// Policy induced by two-sided bets.
    pub fn from_bets(bets: &[f64]) -> Result<Self> {
        bets.iter()
            .map(|&b| bits_to_arm_policy(b))
            .collect::<Result<Vec<_>>>()
            .map(|steps| Self { steps })
    }

    /// Always pull the given arm (1 or 2).
    pub fn always(arm: u8, horizon: usize) -> Result<Self> {
        let step = match arm {
            1 => ArmStep { p1: 1.0, p2: 0.0 },
            2 => ArmStep { p1: 0.0, p2: 1.0 },
            _ => {
                return Err(Error::InvalidInput(format!(
                    "arm must be 1 or 2, got {arm}"
                )))
            }
        };
        Ok(Self {
            steps: vec![step; horizon],
        })
    }

    pub fn steps(&self) -> &[ArmStep] {
        &self.steps
    }

    /// Two-sided bets `b̃ = p1 − p2`.
    pub fn to_bets(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.p1 - s.p2).collect()
    }

    /// Writes the `t,p1,p2` CSV format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (t, s) in self.steps.iter().enumerate() {
            w.serialize(PolicyRow {
                t: t + 1,
                p1: s.p1,
                p2: s.p2,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut steps = Vec::new();
        for (row, rec) in rdr.deserialize::<PolicyRow>().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                line: row + 2,
                message: e.to_string(),
            })?;
            steps.push(ArmStep {
                p1: rec.p1,
                p2: rec.p2,
            });
        }
        Self::new(steps)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyRow {
    t: usize,
    p1: f64,
    p2: f64,
}

/// Bit sequence of the regret-to-max reduction, with the scale applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub sequence: Sequence,
    /// 1 for the raw `(b1 − b2)/2 ∈ [-1/2, 1/2]`, 2 for the standard range.
    pub scale: f64,
}

/// `b_t = scale·(b1_t − b2_t)/2`.
pub fn experts_to_bits(inst: &ExpertsInstance, scaled: bool) -> Reduction {
    let scale = if scaled { 2.0 } else { 1.0 };
    let values = inst
        .b1
        .iter()
        .zip(&inst.b2)
        .map(|(x, y)| scale * (x - y) / 2.0)
        .collect();
    Reduction {
        sequence: Sequence::new(values).expect("differences of [0, 1] payoffs lie in [-1, 1]"),
        scale,
    }
}

/// `((1 + b̃)/2, (1 − b̃)/2)`.
pub fn bits_to_arm_policy(prediction: f64) -> Result<ArmStep> {
    if !(-1.0..=1.0).contains(&prediction) {
        return Err(Error::InvalidInput(format!(
            "prediction {prediction} is outside [-1, 1]"
        )));
    }
    Ok(ArmStep {
        p1: (1.0 + prediction) / 2.0,
        p2: (1.0 - prediction) / 2.0,
    })
}

/// `A′_T = Σ_t b1_t·p1_t + b2_t·p2_t`.
pub fn experts_payoff(inst: &ExpertsInstance, policy: &ArmPolicy) -> Result<f64> {
    if policy.steps.len() != inst.horizon() {
        return Err(Error::InvalidInput(format!(
            "policy has {} steps for an instance of length {}",
            policy.steps.len(),
            inst.horizon()
        )));
    }
    let payoff: f64 = inst
        .b1
        .iter()
        .zip(&inst.b2)
        .zip(&policy.steps)
        .map(|((b1, b2), s)| b1 * s.p1 + b2 * s.p2)
        .sum();
    #[cfg(debug_assertions)]
    {
        let (x1, x2) = inst.totals();
        let bits = experts_to_bits(inst, false);
        let bit_payoff: f64 = bits
            .sequence
            .values()
            .iter()
            .zip(policy.to_bets())
            .map(|(b, p)| b * p)
            .sum();
        let gap = payoff - ((x1 + x2) / 2.0 + bit_payoff);
        debug_assert!(
            gap.abs() <= 1e-12 * (1.0 + inst.horizon() as f64),
            "reduction identity off by {gap}"
        );
    }
    Ok(payoff)
}

/// Sequence of the one-sided reduction and its policy map.
#[derive(Debug, Clone, PartialEq)]
pub struct OneSided {
    /// `b_t = b2_t − b1_t`.
    pub sequence: Sequence,
}

impl OneSided {
    /// Probabilities `(1 − b̃_t, b̃_t)` for one-sided bets `b̃_t ∈ [0, 1]`.
    pub fn policy(&self, bets: &[f64]) -> Result<ArmPolicy> {
        if bets.len() != self.sequence.len() {
            return Err(Error::InvalidInput(format!(
                "{} bets for a sequence of length {}",
                bets.len(),
                self.sequence.len()
            )));
        }
        let steps = bets
            .iter()
            .enumerate()
            .map(|(t, &b)| {
                if (0.0..=1.0).contains(&b) {
                    Ok(ArmStep { p1: 1.0 - b, p2: b })
                } else {
                    Err(Error::InvalidInput(format!(
                        "one-sided bet {b} at step {} is outside [0, 1]",
                        t + 1
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ArmPolicy { steps })
    }

    /// `X_1 + Σ_t b̃_t·(b2_t − b1_t)`.
    pub fn payoff(&self, inst: &ExpertsInstance, bets: &[f64]) -> Result<f64> {
        self.policy(bets)?;
        let x1 = inst.totals().0;
        Ok(x1
            + self
                .sequence
                .values()
                .iter()
                .zip(bets)
                .map(|(b, p)| b * p)
                .sum::<f64>())
    }
}

pub fn one_sided_reduction(inst: &ExpertsInstance) -> OneSided {
    let values = inst.b2.iter().zip(&inst.b1).map(|(y, x)| y - x).collect();
    OneSided {
        sequence: Sequence::new(values).expect("differences of [0, 1] payoffs lie in [-1, 1]"),
    }
}

/// Regret bookkeeping of a policy against the two experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub payoff: f64,
    pub x1: f64,
    pub x2: f64,
    /// `X_1 − A′`.
    pub regret_1: f64,
    /// `X_2 − A′`.
    pub regret_2: f64,
    /// `max(X_1, X_2) − A′`.
    pub regret_to_max: f64,
    /// `(X_1 + X_2)/2 − A′`.
    pub regret_to_average: f64,
}

pub fn regret_summary(inst: &ExpertsInstance, policy: &ArmPolicy) -> Result<RegretSummary> {
    let payoff = experts_payoff(inst, policy)?;
    let (x1, x2) = inst.totals();
    Ok(RegretSummary {
        payoff,
        x1,
        x2,
        regret_1: x1 - payoff,
        regret_2: x2 - payoff,
        regret_to_max: x1.max(x2) - payoff,
        regret_to_average: (x1 + x2) / 2.0 - payoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn inst(b1: &[f64], b2: &[f64]) -> ExpertsInstance {
        ExpertsInstance::new(b1.to_vec(), b2.to_vec()).unwrap()
    }

    #[test]
    fn bits_examples() {
        let same = inst(&[0.3, 0.9], &[0.3, 0.9]);
        assert_eq!(experts_to_bits(&same, false).sequence.values(), &[0.0, 0.0]);
        let one_zero = inst(&[1.0, 1.0], &[0.0, 0.0]);
        assert_eq!(
            experts_to_bits(&one_zero, false).sequence.values(),
            &[0.5, 0.5]
        );
        assert_eq!(
            experts_to_bits(&one_zero, true).sequence.values(),
            &[1.0, 1.0]
        );
        let r = experts_to_bits(&inst(&[1.0], &[0.4]), false);
        assert!((r.sequence.values()[0] - 0.3).abs() < 1e-15);
        let r = experts_to_bits(&inst(&[1.0], &[0.4]), true);
        assert!((r.sequence.values()[0] - 0.6).abs() < 1e-15);
        assert_eq!(r.scale, 2.0);
    }

    #[test]
    fn arm_policy_examples() {
        assert_eq!(
            bits_to_arm_policy(0.0).unwrap(),
            ArmStep { p1: 0.5, p2: 0.5 }
        );
        assert_eq!(
            bits_to_arm_policy(1.0).unwrap(),
            ArmStep { p1: 1.0, p2: 0.0 }
        );
        assert_eq!(
            bits_to_arm_policy(-0.5).unwrap(),
            ArmStep { p1: 0.25, p2: 0.75 }
        );
        assert!(bits_to_arm_policy(1.01).is_err());
    }

    #[test]
    fn payoff_examples() {
        let i = inst(&[1.0, 0.2, 0.7], &[0.0, 0.9, 0.4]);
        let (x1, x2) = i.totals();
        let uniform = ArmPolicy::from_bets(&[0.0; 3]).unwrap();
        assert!((experts_payoff(&i, &uniform).unwrap() - (x1 + x2) / 2.0).abs() < 1e-12);
        let arm1 = ArmPolicy::always(1, 3).unwrap();
        assert!((experts_payoff(&i, &arm1).unwrap() - x1).abs() < 1e-12);
        assert!(experts_payoff(&i, &ArmPolicy::always(1, 2).unwrap()).is_err());
    }

    #[test]
    fn one_sided_examples() {
        let i = inst(&[1.0, 0.2, 0.7], &[0.0, 0.9, 0.4]);
        let (x1, x2) = i.totals();
        let red = one_sided_reduction(&i);
        assert!((red.payoff(&i, &[0.0; 3]).unwrap() - x1).abs() < 1e-12);
        assert!((red.payoff(&i, &[1.0; 3]).unwrap() - x2).abs() < 1e-12);
        assert!(red.payoff(&i, &[0.5, -0.1, 0.0]).is_err());
        let bets = [0.25, 0.5, 0.75];
        let via_policy = experts_payoff(&i, &red.policy(&bets).unwrap()).unwrap();
        assert!((via_policy - red.payoff(&i, &bets).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn policy_validation_and_round_trip() {
        assert!(ArmPolicy::new(vec![ArmStep { p1: 0.7, p2: 0.2 }]).is_err());
        assert!(ArmPolicy::new(vec![ArmStep { p1: 1.2, p2: -0.2 }]).is_err());
        let mut r = crate::rng::seeded(2);
        for _ in 0..1000 {
            let b: f64 = r.random_range(-1.0..=1.0);
            let s = bits_to_arm_policy(b).unwrap();
            assert!((s.p1 - s.p2 - b).abs() < 1e-15);
            assert!((s.p1 + s.p2 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_round_trip() {
        let i = inst(&[1.0, 0.25], &[0.5, 0.0]);
        let mut buf = Vec::new();
        i.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "t,b1,b2\n1,1.0,0.5\n2,0.25,0.0\n"
        );
        assert_eq!(ExpertsInstance::read_csv(buf.as_slice()).unwrap(), i);
        let p = ArmPolicy::from_bets(&[0.5, -1.0]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(ArmPolicy::read_csv(buf.as_slice()).unwrap(), p);
        assert!(ExpertsInstance::read_csv("t,b1,b2\n1,1.5,0\n".as_bytes()).is_err());
        assert!(ExpertsInstance::read_csv("t,b1,b2\n2,1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn regret_summary_fields() {
        let i = inst(&[1.0, 1.0], &[0.0, 1.0]);
        let s = regret_summary(&i, &ArmPolicy::always(2, 2).unwrap()).unwrap();
        assert_eq!(s.payoff, 1.0);
        assert_eq!(s.regret_1, 1.0);
        assert_eq!(s.regret_2, 0.0);
        assert_eq!(s.regret_to_max, 1.0);
        assert_eq!(s.regret_to_average, 0.5);
    }
}
