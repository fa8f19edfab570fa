//! Reference bettors: the two constant experts and exponential weights over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{Prediction, Predictor};
use crate::sequence::{Partition, PrefixSums, Sequence};

/// Always bets the same value.
#[derive(Debug, Clone)]
pub struct ConstantExpert {
    horizon: usize,
    bet: f64,
    seen: usize,
}

impl ConstantExpert {
    pub fn new(horizon: usize, bet: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&bet) {
            return Err(Error::InvalidInput(format!(
                "constant bet {bet} is outside [-1, 1]"
            )));
        }
        Ok(Self {
            horizon,
            bet,
            seen: 0,
        })
    }
}

impl Predictor for ConstantExpert {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&mut self) -> Result<Prediction> {
        Ok(Prediction {
            value: self.bet,
            clamped: false,
        })
    }

    fn observe(&mut self, _value: f64) -> Result<()> {
        if self.seen >= self.horizon {
            return Err(Error::OutOfRange("game already finished".into()));
        }
        self.seen += 1;
        Ok(())
    }
}

/// Exponential weights over fixed experts (here `+1` and `−1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpertEnsemble {
    horizon: usize,
    experts: Vec<f64>,
    weights: Vec<f64>,
    eta: f64,
    seen: usize,
}

impl ExpertEnsemble {
    /// The two constant experts with equal weights.
    pub fn two_constant(horizon: usize, eta: f64) -> Result<Self> {
        Self::new(horizon, vec![1.0, -1.0], eta)
    }

    pub fn new(horizon: usize, experts: Vec<f64>, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        if experts.is_empty() || experts.iter().any(|e| !(-1.0..=1.0).contains(e)) {
            return Err(Error::InvalidInput(
                "experts must be non-empty bets in [-1, 1]".into(),
            ));
        }
        let n = experts.len();
        Ok(Self {
            horizon,
            experts,
            weights: vec![1.0 / n as f64; n],
            eta,
            seen: 0,
        })
    }

    /// `η = √(2 ln 2 / T)`.
    pub fn default_eta(horizon: usize) -> f64 {
        (2.0 * std::f64::consts::LN_2 / horizon.max(1) as f64).sqrt()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Weighted mix of the experts' bets.
    pub fn weighted_majority_step(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.experts)
            .map(|(w, e)| w * e)
            .sum()
    }

    /// `w_e ← w_e·exp(η·b·e)`, then renormalize.
    pub fn update(&mut self, b: f64) {
        // Shift exponents by their max so the largest factor is exactly one.
        let exps: Vec<f64> = self.experts.iter().map(|e| self.eta * b * e).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (w, x) in self.weights.iter_mut().zip(&exps) {
            *w *= (x - top).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }
}

impl Predictor for ExpertEnsemble {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&mut self) -> Result<Prediction> {
        Ok(Prediction::clamp(self.weighted_majority_step()))
    }

    fn observe(&mut self, value: f64) -> Result<()> {
        if self.seen >= self.horizon {
            return Err(Error::OutOfRange("game already finished".into()));
        }
        self.seen += 1;
        self.update(value);
        Ok(())
    }
}

/// `|h([1, T])|`: payoff of the better constant expert.
pub fn best_expert_hindsight(seq: &Sequence) -> f64 {
    seq.height().abs()
}

/// `Σ_i |h(X_i)|`: the better constant expert chosen separately per interval.
pub fn best_partition_expert_payoff(seq: &Sequence, part: &Partition) -> Result<f64> {
    part.check_covers(seq.len())?;
    let ps = PrefixSums::build(seq.values());
    part.intervals()
        .iter()
        .map(|iv| ps.height(*iv).map(f64::abs))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::run_game;
    use crate::rng;

    fn seq(v: &[f64]) -> Sequence {
        Sequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn equal_weights_predict_zero() {
        let ens = ExpertEnsemble::two_constant(10, 0.3).unwrap();
        assert_eq!(ens.weighted_majority_step(), 0.0);
    }

    #[test]
    fn run_of_ones_gives_tanh() {
        let eta = 0.17;
        let mut ens = ExpertEnsemble::two_constant(100, eta).unwrap();
        for k in 1..=60 {
            ens.update(1.0);
            let expected = (k as f64 * eta).tanh();
            assert!((ens.weighted_majority_step() - expected).abs() < 1e-12);
            assert!((ens.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_ones_regret_small() {
        let t = 400;
        let mut ens = ExpertEnsemble::two_constant(t, ExpertEnsemble::default_eta(t)).unwrap();
        let g = run_game(&mut ens, &vec![1.0; t]).unwrap();
        assert!(g.payoff >= t as f64 - 2.0 * (t as f64).sqrt());
    }

    #[test]
    fn long_runs_do_not_underflow() {
        let t = 200_000;
        let mut ens = ExpertEnsemble::two_constant(t, 0.5).unwrap();
        for _ in 0..t {
            ens.update(-1.0);
        }
        let p = ens.weighted_majority_step();
        assert!(p.is_finite() && p >= -1.0);
        assert!(ens.weights().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn predictions_stay_in_range() {
        let t = 1000;
        let mut r = rng::seeded(5);
        let v: Vec<f64> = (0..t)
            .map(|k| if k < 600 { 1.0 } else { rng::sign(&mut r) })
            .collect();
        let mut ens = ExpertEnsemble::two_constant(t, ExpertEnsemble::default_eta(t)).unwrap();
        let g = run_game(&mut ens, &v).unwrap();
        assert!(g
            .steps
            .iter()
            .all(|s| s.prediction.abs() <= 1.0 && !s.clamped));
    }

    #[test]
    fn predictions_strictly_inside_while_representable() {
        // tanh(kη) rounds to exactly 1 once kη exceeds about 19; at T = 100
        // the largest exponent is about 11.8.
        let t = 100;
        for v in [vec![1.0; t], vec![-1.0; t]] {
            let mut ens = ExpertEnsemble::two_constant(t, ExpertEnsemble::default_eta(t)).unwrap();
            let g = run_game(&mut ens, &v).unwrap();
            assert!(g.steps.iter().all(|s| s.prediction.abs() < 1.0));
        }
    }

    #[test]
    fn constant_experts_score_height() {
        let v = [1.0, -1.0, 1.0, 1.0, -0.5];
        let g = run_game(&mut ConstantExpert::new(5, 1.0).unwrap(), &v).unwrap();
        assert!((g.payoff - 1.5).abs() < 1e-12);
        let g = run_game(&mut ConstantExpert::new(5, -1.0).unwrap(), &v).unwrap();
        assert!((g.payoff + 1.5).abs() < 1e-12);
        assert!(ConstantExpert::new(5, 1.5).is_err());
    }

    #[test]
    fn hindsight_values() {
        assert_eq!(best_expert_hindsight(&seq(&[1.0; 4])), 4.0);
        assert_eq!(best_expert_hindsight(&seq(&[1.0, -1.0])), 0.0);
        assert_eq!(best_expert_hindsight(&seq(&[-1.0, -1.0, 1.0])), 1.0);
    }

    #[test]
    fn partition_expert_values() {
        let s = seq(&[1.0, 1.0, -1.0, -1.0]);
        let p = Partition::from_cuts(&[2], 4).unwrap();
        assert_eq!(best_partition_expert_payoff(&s, &p).unwrap(), 4.0);
        assert_eq!(
            best_partition_expert_payoff(&s, &Partition::single(4)).unwrap(),
            0.0
        );
        let alt = seq(&[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(
            best_partition_expert_payoff(&alt, &Partition::singletons(4)).unwrap(),
            4.0
        );
        assert!(best_partition_expert_payoff(&alt, &Partition::single(3)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partition_expert_dominates_hindsight(
                v in prop::collection::vec(-1.0f64..=1.0, 1..60),
                cut_bits in prop::collection::vec(any::<bool>(), 60),
            ) {
                let s = Sequence::new(v.clone()).unwrap();
                let cuts: Vec<usize> = (1..v.len()).filter(|&k| cut_bits[k]).collect();
                let p = Partition::from_cuts(&cuts, v.len()).unwrap();
                prop_assert!(best_partition_expert_payoff(&s, &p).unwrap() >= best_expert_hindsight(&s) - 1e-12);
            }
        }
    }
}
