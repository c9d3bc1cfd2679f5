//! i.i.d. energy-arrival generation.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EnergyTrace;

/// Per-block arrival distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    /// Exponential, parameterized by its mean.
    Exponential {
        mean: f64,
    },
    /// `peak` with probability `probability`, otherwise zero.
    Bernoulli {
        peak: f64,
        probability: f64,
    },
    Constant {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Resamples uniformly from a fixed list.
    Empirical {
        samples: Vec<f64>,
    },
}

/// Seed for trace generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed of replication `r` derived from this base seed.
    pub fn replication(self, r: usize) -> Seed {
        Seed(self.0.wrapping_add(r as u64))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Exponential { mean } => non_negative("mean", *mean),
            DistributionSpec::Bernoulli { peak, probability } => {
                non_negative("peak", *peak)?;
                if !(0.0..=1.0).contains(probability) {
                    return Err(Error::InvalidDistribution(format!(
                        "probability must lie in [0, 1], got {probability}"
                    )));
                }
                Ok(())
            }
            DistributionSpec::Constant { value } => non_negative("value", *value),
            DistributionSpec::Uniform { low, high } => {
                non_negative("low", *low)?;
                non_negative("high", *high)?;
                if low > high {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform needs low <= high, got {low} > {high}"
                    )));
                }
                Ok(())
            }
            DistributionSpec::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidDistribution(
                        "empirical distribution needs at least one sample".into(),
                    ));
                }
                samples.iter().try_for_each(|&s| non_negative("sample", s))
            }
        }
    }

    /// Analytic mean.
    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { mean } => *mean,
            DistributionSpec::Bernoulli { peak, probability } => peak * probability,
            DistributionSpec::Constant { value } => *value,
            DistributionSpec::Uniform { low, high } => (low + high) / 2.0,
            DistributionSpec::Empirical { samples } => {
                samples.iter().sum::<f64>() / samples.len() as f64
            }
        }
    }

    /// Analytic standard deviation.
    pub fn std_dev(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { mean } => *mean,
            DistributionSpec::Bernoulli { peak, probability } => {
                peak * (probability * (1.0 - probability)).sqrt()
            }
            DistributionSpec::Constant { .. } => 0.0,
            DistributionSpec::Uniform { low, high } => (high - low) / 12f64.sqrt(),
            DistributionSpec::Empirical { samples } => {
                let m = self.mean();
                let var =
                    samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / samples.len() as f64;
                var.sqrt()
            }
        }
    }

    /// Same family rescaled to the given mean. Shape parameters such as the
    /// Bernoulli probability are kept; scale parameters are stretched.
    pub fn with_mean(&self, target: f64) -> Result<Self> {
        non_negative("target mean", target)?;
        let current = self.mean();
        let spec = match self {
            DistributionSpec::Exponential { .. } => DistributionSpec::Exponential { mean: target },
            DistributionSpec::Constant { .. } => DistributionSpec::Constant { value: target },
            DistributionSpec::Bernoulli { probability, .. } => {
                if *probability == 0.0 {
                    return Err(Error::InvalidDistribution(
                        "cannot rescale a Bernoulli distribution with probability 0".into(),
                    ));
                }
                DistributionSpec::Bernoulli {
                    peak: target / probability,
                    probability: *probability,
                }
            }
            DistributionSpec::Uniform { low, high } => {
                if current == 0.0 {
                    DistributionSpec::Uniform {
                        low: target,
                        high: target,
                    }
                } else {
                    let k = target / current;
                    DistributionSpec::Uniform {
                        low: low * k,
                        high: high * k,
                    }
                }
            }
            DistributionSpec::Empirical { samples } => {
                if current == 0.0 {
                    return Err(Error::InvalidDistribution(
                        "cannot rescale an all-zero empirical distribution".into(),
                    ));
                }
                let k = target / current;
                DistributionSpec::Empirical {
                    samples: samples.iter().map(|s| s * k).collect(),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    fn draw<R: Rng>(&self, rng: &mut R, exp: Option<&Exp<f64>>) -> f64 {
        match self {
            DistributionSpec::Exponential { mean } => match exp {
                Some(d) => mean * d.sample(rng),
                None => 0.0,
            },
            DistributionSpec::Bernoulli { peak, probability } => {
                if rng.random_bool(*probability) {
                    *peak
                } else {
                    0.0
                }
            }
            DistributionSpec::Constant { value } => *value,
            DistributionSpec::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            DistributionSpec::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }
}

/// Draws `horizon` i.i.d. arrivals; a pure function of its arguments.
pub fn sample_trace(spec: &DistributionSpec, horizon: usize, seed: Seed) -> Result<EnergyTrace> {
    spec.validate()?;
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    // Unit-rate exponential scaled by the mean; a zero mean degenerates to 0.
    let exp = match spec {
        DistributionSpec::Exponential { mean } if *mean > 0.0 => {
            Some(Exp::new(1.0).expect("unit rate is valid"))
        }
        _ => None,
    };
    let arrivals = (0..horizon)
        .map(|_| spec.draw(&mut rng, exp.as_ref()))
        .collect();
    EnergyTrace::new(arrivals)
}

pub fn mean(spec: &DistributionSpec) -> f64 {
    spec.mean()
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Exponential { mean } => write!(f, "exponential:{mean}"),
            DistributionSpec::Bernoulli { peak, probability } => {
                write!(f, "bernoulli:{peak},{probability}")
            }
            DistributionSpec::Constant { value } => write!(f, "constant:{value}"),
            DistributionSpec::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            DistributionSpec::Empirical { samples } => {
                f.write_str("empirical:")?;
                for (i, s) in samples.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `kind:p1,p2,...`, e.g. `exponential:10` or `bernoulli:10,0.5`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s.split_once(':').ok_or_else(|| {
            Error::InvalidDistribution(format!(
                "expected `kind:params` (e.g. `exponential:10`), got `{s}`"
            ))
        })?;
        let values = params
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<f64>().map_err(|_| {
                    Error::InvalidDistribution(format!("`{p}` is not a number in `{s}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let expect = |n: usize| -> Result<()> {
            if values.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(format!(
                    "`{kind}` takes {n} parameter(s), got {} in `{s}`",
                    values.len()
                )))
            }
        };
        let spec = match kind.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => {
                expect(1)?;
                DistributionSpec::Exponential { mean: values[0] }
            }
            "bernoulli" => {
                expect(2)?;
                DistributionSpec::Bernoulli {
                    peak: values[0],
                    probability: values[1],
                }
            }
            "constant" | "const" => {
                expect(1)?;
                DistributionSpec::Constant { value: values[0] }
            }
            "uniform" => {
                expect(2)?;
                DistributionSpec::Uniform {
                    low: values[0],
                    high: values[1],
                }
            }
            "empirical" => {
                if values.is_empty() {
                    return Err(Error::InvalidDistribution(format!(
                        "`empirical` needs at least one sample in `{s}`"
                    )));
                }
                DistributionSpec::Empirical { samples: values }
            }
            other => {
                return Err(Error::InvalidDistribution(format!(
                    "unknown distribution kind `{other}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}
