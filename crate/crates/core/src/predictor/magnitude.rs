use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of magnitudes, with non-negative support and mean one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MagnitudeModel {
    /// Always one; reduces real-valued prediction to bit prediction.
    PointMassOne,
    /// `|N(0, π/2)|`, whose mean is one.
    HalfNormalMeanOne,
    /// Uniform draw from stored values, rescaled to mean one.
    Empirical { values: Vec<f64> },
}

impl MagnitudeModel {
    /// Empirical model from non-negative observations. The values are
    /// divided by their mean.
    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Model(
                "empirical model needs at least one value".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Model(format!(
                "magnitude {bad} is negative or not finite"
            )));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean <= 0.0 {
            return Err(Error::Model("empirical magnitudes average to zero".into()));
        }
        Ok(Self::Empirical {
            values: values.into_iter().map(|v| v / mean).collect(),
        })
    }

    /// Reads one magnitude per line (absolute values are taken, so a file of
    /// returns works directly).
    pub fn empirical_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("cannot parse {line:?} as a magnitude"),
            })?;
            values.push(v.abs());
        }
        Self::empirical(values)
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, Self::PointMassOne)
    }

    /// One magnitude; errors if the model produced something invalid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let m = match self {
            Self::PointMassOne => 1.0,
            Self::HalfNormalMeanOne => {
                let normal = Normal::new(0.0, std::f64::consts::FRAC_PI_2.sqrt())
                    .map_err(|e| Error::Model(e.to_string()))?;
                normal.sample(rng).abs()
            }
            Self::Empirical { values } => {
                if values.is_empty() {
                    return Err(Error::Model("empirical model has no values".into()));
                }
                values[rng.random_range(0..values.len())]
            }
        };
        if !m.is_finite() || m < 0.0 {
            return Err(Error::Model(format!("sampled invalid magnitude {m}")));
        }
        Ok(m)
    }

    /// One draw from the size-biased law `m·p(m)`, which is a distribution
    /// because the mean is one. For an integrand `g`, `E[g(m)/m]` under this
    /// law equals `E[g(m)]` under the model.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let m = match self {
            Self::PointMassOne => 1.0,
            // Size-biasing a half-normal with scale σ gives a Rayleigh with scale σ.
            Self::HalfNormalMeanOne => {
                let u: f64 = rng.random();
                std::f64::consts::FRAC_PI_2.sqrt() * (-2.0 * (1.0 - u).ln()).sqrt()
            }
            Self::Empirical { values } => {
                let w = WeightedIndex::new(values).map_err(|e| Error::Model(e.to_string()))?;
                values[w.sample(rng)]
            }
        };
        if !m.is_finite() || m < 0.0 {
            return Err(Error::Model(format!("sampled invalid magnitude {m}")));
        }
        Ok(m)
    }

    /// Sample mean and standard error over `n` draws.
    pub fn sample_mean<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(f64, f64)> {
        let draws = (0..n)
            .map(|_| self.sample(rng))
            .collect::<Result<Vec<_>>>()?;
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
        Ok((mean, (var / n as f64).sqrt()))
    }

    /// Checks the mean-one invariant: within three standard errors over `n`
    /// draws.
    pub fn validate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<()> {
        let (mean, se) = self.sample_mean(n, rng)?;
        if (mean - 1.0).abs() > 3.0 * se + 1e-12 {
            return Err(Error::Model(format!(
                "sample mean {mean:.5} is more than 3 standard errors ({se:.5}) from 1"
            )));
        }
        Ok(())
    }
}
