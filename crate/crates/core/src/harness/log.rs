use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{Prediction, Predictor, StepRecord};

/// Writes `step,observed_bit,prediction,cumulative_payoff,clamped` rows.
pub fn write_log<W: Write>(writer: W, steps: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in steps {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a prediction log; steps must run `1, 2, …`.
pub fn read_log<R: Read>(reader: R) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out: Vec<StepRecord> = Vec::new();
    for rec in rdr.deserialize() {
        let rec: StepRecord = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = out.len() + 2;
        if rec.step != out.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected step {}, found {}", out.len() + 1, rec.step),
            });
        }
        if !(rec.prediction.is_finite() && rec.prediction.abs() <= 1.0) {
            return Err(Error::Parse {
                line,
                message: format!("prediction {} is outside [-1, 1]", rec.prediction),
            });
        }
        if !rec.observed_bit.is_finite() {
            return Err(Error::Parse {
                line,
                message: "observed value is not finite".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Rescoring of a stored log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScore {
    pub steps: usize,
    /// `Σ observed·prediction`, accumulated in step order.
    pub payoff: f64,
    /// Final `cumulative_payoff` in the log.
    pub recorded_payoff: f64,
    /// Whether the recomputed cumulative payoff matches the log at every step.
    pub consistent: bool,
    /// First step whose recorded cumulative payoff disagrees.
    pub first_mismatch: Option<usize>,
    pub clamp_count: usize,
}

/// Recomputes the payoff of a log. Accumulation order matches the game
/// runner, so logs it wrote rescore exactly.
pub fn score_log(steps: &[StepRecord]) -> LogScore {
    let mut payoff = 0.0;
    let mut first_mismatch = None;
    for s in steps {
        payoff += s.observed_bit * s.prediction;
        if first_mismatch.is_none() && payoff != s.cumulative_payoff {
            first_mismatch = Some(s.step);
        }
    }
    LogScore {
        steps: steps.len(),
        payoff,
        recorded_payoff: steps.last().map_or(0.0, |s| s.cumulative_payoff),
        consistent: first_mismatch.is_none(),
        first_mismatch,
        clamp_count: steps.iter().filter(|s| s.clamped).count(),
    }
}

/// Replays the predictions of a stored log. Observing a value different
/// from the logged one is an error.
#[derive(Debug, Clone)]
pub struct ReplayPredictor {
    steps: Vec<StepRecord>,
    pos: usize,
}

impl ReplayPredictor {
    pub fn new(steps: Vec<StepRecord>) -> Self {
        Self { steps, pos: 0 }
    }
}

impl Predictor for ReplayPredictor {
    fn horizon(&self) -> usize {
        self.steps.len()
    }

    fn predict(&mut self) -> Result<Prediction> {
        let s = self
            .steps
            .get(self.pos)
            .ok_or_else(|| Error::OutOfRange("log exhausted".into()))?;
        Ok(Prediction {
            value: s.prediction,
            clamped: s.clamped,
        })
    }

    fn observe(&mut self, value: f64) -> Result<()> {
        let s = self
            .steps
            .get(self.pos)
            .ok_or_else(|| Error::OutOfRange("log exhausted".into()))?;
        if s.observed_bit != value {
            return Err(Error::InvalidInput(format!(
                "log step {} recorded {} but the sequence has {value}",
                s.step, s.observed_bit
            )));
        }
        self.pos += 1;
        Ok(())
    }

    fn clamp_count(&self) -> usize {
        self.steps[..self.pos].iter().filter(|s| s.clamped).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::ExpertEnsemble;
    use crate::predictor::run_game;
    use crate::rng;

    fn game() -> (Vec<f64>, Vec<StepRecord>) {
        let mut r = rng::seeded(2);
        let v: Vec<f64> = (0..50).map(|_| rng::sign(&mut r)).collect();
        let mut wm = ExpertEnsemble::two_constant(50, 0.3).unwrap();
        let g = run_game(&mut wm, &v).unwrap();
        (v, g.steps)
    }

    #[test]
    fn round_trip_rescores_exactly() {
        let (_, steps) = game();
        let mut buf = Vec::new();
        write_log(&mut buf, &steps).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,observed_bit,prediction,cumulative_payoff,clamped\n1,"));
        let back = read_log(&buf[..]).unwrap();
        assert_eq!(back, steps);
        let score = score_log(&back);
        assert!(score.consistent);
        assert_eq!(score.payoff, steps.last().unwrap().cumulative_payoff);
    }

    #[test]
    fn tampered_log_is_detected() {
        let (_, mut steps) = game();
        steps[10].prediction = -steps[10].prediction + 0.1;
        let score = score_log(&steps);
        assert!(!score.consistent);
        assert_eq!(score.first_mismatch, Some(11));
    }

    #[test]
    fn replay_reproduces_payoff() {
        let (v, steps) = game();
        let g = run_game(&mut ReplayPredictor::new(steps.clone()), &v).unwrap();
        assert_eq!(g.payoff, steps.last().unwrap().cumulative_payoff);
        let mut other = v.clone();
        other[3] = -other[3];
        assert!(run_game(&mut ReplayPredictor::new(steps), &other).is_err());
    }

    #[test]
    fn malformed_logs() {
        let bad_step = "step,observed_bit,prediction,cumulative_payoff,clamped\n2,1,0.5,0.5,0\n";
        assert!(matches!(
            read_log(bad_step.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad_pred = "step,observed_bit,prediction,cumulative_payoff,clamped\n1,1,1.5,1.5,0\n";
        assert!(read_log(bad_pred.as_bytes()).is_err());
        let bad_flag = "step,observed_bit,prediction,cumulative_payoff,clamped\n1,1,0.5,0.5,7\n";
        assert!(read_log(bad_flag.as_bytes()).is_err());
    }
}
