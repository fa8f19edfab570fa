use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::MagnitudeModel;
use crate::rng;
use crate::sequence::Sequence;

/// Rejection-sampling budget per block of `low-height-blocks`.
pub const MAX_REJECTIONS: usize = 1_000_000;

/// Sign rule for the real-valued adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPattern {
    #[default]
    AllPositive,
    Alternating,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Independent fair signs.
    Uniform,
    Constant {
        value: f64,
    },
    /// `+1, −1, +1, …`
    Alternating,
    /// `count` blocks of `block_len`. Each block picks a direction by a fair
    /// coin and each value follows it with probability `bias`.
    BiasedBlocks {
        block_len: usize,
        bias: f64,
        count: usize,
    },
    /// `count` uniform blocks of `block_len`, each redrawn until its absolute
    /// height is at most `2·c·√block_len`.
    LowHeightBlocks {
        block_len: usize,
        c: f64,
        count: usize,
    },
    /// Signs from `signs`, magnitudes drawn i.i.d. from `model`. Values may
    /// exceed one in absolute value.
    RealSignsAdversarial {
        model: MagnitudeModel,
        #[serde(default)]
        signs: SignPattern,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    /// Parameter problems, independent of the horizon.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.kind {
            GeneratorKind::Constant { value } if !(value.is_finite() && value.abs() <= 1.0) => {
                out.push(format!("constant value {value} is outside [-1, 1]"))
            }
            GeneratorKind::BiasedBlocks {
                block_len,
                bias,
                count,
            } => {
                if *block_len == 0 || *count == 0 {
                    out.push("biased-blocks needs positive block_len and count".into());
                }
                if !(0.0..=1.0).contains(bias) {
                    out.push(format!("bias {bias} is outside [0, 1]"));
                }
            }
            GeneratorKind::LowHeightBlocks {
                block_len,
                c,
                count,
            } => {
                if *block_len == 0 || *count == 0 {
                    out.push("low-height-blocks needs positive block_len and count".into());
                }
                if !(c.is_finite() && *c > 0.0) {
                    out.push(format!("low-height-blocks needs c > 0, got {c}"));
                }
            }
            _ => {}
        }
        out
    }

    /// Problems including those that depend on `horizon`.
    pub fn problems_for(&self, horizon: usize) -> Vec<String> {
        let mut out = self.problems();
        if horizon == 0 {
            out.push("horizon must be at least 1".into());
        }
        match &self.kind {
            GeneratorKind::BiasedBlocks {
                block_len, count, ..
            }
            | GeneratorKind::LowHeightBlocks {
                block_len, count, ..
            } if block_len * count != horizon => out.push(format!(
                "block_len·count = {}·{} does not equal horizon {horizon}",
                block_len, count
            )),
            _ => {}
        }
        out
    }
}

/// Draws a length-`horizon` sequence; deterministic in `spec`.
pub fn generate(spec: &GeneratorSpec, horizon: usize) -> Result<Vec<f64>> {
    let problems = spec.problems_for(horizon);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut r = rng::seeded(spec.seed);
    let values = match &spec.kind {
        GeneratorKind::Uniform => (0..horizon).map(|_| rng::sign(&mut r)).collect(),
        GeneratorKind::Constant { value } => vec![*value; horizon],
        GeneratorKind::Alternating => (0..horizon)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
        GeneratorKind::BiasedBlocks {
            block_len,
            bias,
            count,
        } => {
            let mut v = Vec::with_capacity(horizon);
            for _ in 0..*count {
                let dir = rng::sign(&mut r);
                for _ in 0..*block_len {
                    v.push(if r.random::<f64>() < *bias { dir } else { -dir });
                }
            }
            v
        }
        GeneratorKind::LowHeightBlocks {
            block_len,
            c,
            count,
        } => {
            let bound = 2.0 * c * (*block_len as f64).sqrt();
            let mut v = Vec::with_capacity(horizon);
            let mut block = vec![0.0; *block_len];
            for _ in 0..*count {
                let mut draws = 0;
                loop {
                    if draws == MAX_REJECTIONS {
                        return Err(Error::InvalidInput(format!(
                            "no block of length {block_len} with |height| ≤ {bound} after {MAX_REJECTIONS} draws"
                        )));
                    }
                    draws += 1;
                    block.iter_mut().for_each(|b| *b = rng::sign(&mut r));
                    if block.iter().sum::<f64>().abs() <= bound {
                        break;
                    }
                }
                v.extend_from_slice(&block);
            }
            v
        }
        GeneratorKind::RealSignsAdversarial { model, signs } => {
            let mut mags = rng::stream(spec.seed, rng::MAGNITUDE_BASE);
            let mut v = Vec::with_capacity(horizon);
            for k in 0..horizon {
                let s = match signs {
                    SignPattern::AllPositive => 1.0,
                    SignPattern::Alternating if k % 2 == 1 => -1.0,
                    SignPattern::Alternating => 1.0,
                    SignPattern::Uniform => rng::sign(&mut r),
                };
                v.push(s * model.sample(&mut mags)?);
            }
            v
        }
    };
    Ok(values)
}

/// [`generate`] for generators whose output lies in `[-1, 1]`.
pub fn generate_sequence(spec: &GeneratorSpec, horizon: usize) -> Result<Sequence> {
    Sequence::new(generate(spec, horizon)?)
}
