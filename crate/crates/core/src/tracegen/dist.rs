//! Inter-arrival laws used for fault and false-prediction renewal processes.

use rand::Rng;
use rand_distr::{Distribution, Exp, Weibull};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};

/// An inter-arrival law, parameterized by its mean.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Exponential { mean: f64 },
    /// Weibull law with shape `k`, scaled so that its expectation is `mean`.
    Weibull { shape: f64, mean: f64 },
    /// Uniform draw from a multiset of observed durations.
    EmpiricalDurations { samples: Vec<f64> },
    /// Uniform on `(0, 2 * mean]`.
    UniformMean { mean: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Self::Exponential { mean } | Self::UniformMean { mean } => positive("mean", *mean),
            Self::Weibull { shape, mean } => {
                positive("Weibull shape", *shape)?;
                positive("mean", *mean)
            }
            Self::EmpiricalDurations { samples } => {
                if samples.is_empty() {
                    return Err(invalid("empirical distribution has no samples"));
                }
                samples.iter().try_for_each(|s| positive("empirical sample", *s))
            }
        }
    }

    /// Expectation of the law (the sample mean for empirical durations).
    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { mean } | Self::UniformMean { mean } | Self::Weibull { mean, .. } => *mean,
            Self::EmpiricalDurations { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Same family, rescaled to expectation `mean`.
    pub fn rescaled(&self, mean: f64) -> Result<Self> {
        let spec = match self {
            Self::Exponential { .. } => Self::Exponential { mean },
            Self::UniformMean { .. } => Self::UniformMean { mean },
            Self::Weibull { shape, .. } => Self::Weibull { shape: *shape, mean },
            Self::EmpiricalDurations { samples } => {
                let factor = mean / self.mean();
                Self::EmpiricalDurations {
                    samples: samples.iter().map(|s| s * factor).collect(),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Short human-readable label, e.g. `weibull:0.7`.
    pub fn family_label(&self) -> String {
        match self {
            Self::Exponential { .. } => "exp".into(),
            Self::Weibull { shape, .. } => format!("weibull:{shape}"),
            Self::EmpiricalDurations { .. } => "empirical".into(),
            Self::UniformMean { .. } => "uniform".into(),
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match self {
            Self::Exponential { mean } => {
                Sampler::Exponential(Exp::new(1.0 / mean).map_err(|e| invalid(e.to_string()))?)
            }
            Self::Weibull { shape, mean } => {
                let scale = mean / gamma(1.0 + 1.0 / shape);
                Sampler::Weibull(Weibull::new(scale, *shape).map_err(|e| invalid(e.to_string()))?)
            }
            Self::EmpiricalDurations { samples } => Sampler::Empirical(samples.clone()),
            Self::UniformMean { mean } => Sampler::Uniform(2.0 * mean),
        })
    }
}

/// Ready-to-draw form of a [`DistributionSpec`].
#[derive(Debug, Clone)]
pub enum Sampler {
    Exponential(Exp<f64>),
    Weibull(Weibull<f64>),
    Empirical(Vec<f64>),
    Uniform(f64),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential(d) => d.sample(rng),
            Self::Weibull(d) => d.sample(rng),
            Self::Empirical(samples) => samples[rng.random_range(0..samples.len())],
            // 1 - U lies in (0, 1]
            Self::Uniform(width) => width * (1.0 - rng.random::<f64>()),
        }
    }
}

/// Arrival times of a renewal process started at 0, up to and including `horizon`.
pub fn renewal_times<R: Rng + ?Sized>(sampler: &Sampler, horizon: f64, rng: &mut R, out: &mut Vec<f64>) {
    let mut t = 0.0;
    loop {
        t += sampler.sample(rng);
        if t > horizon {
            break;
        }
        out.push(t);
    }
}
