use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};

/// Supported inter-event time distribution families.
///
/// Each family is parameterized by its mean and coefficient of variation so
/// that moment information, not family shape, drives the diffusion limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionFamily {
    Exponential,
    Gamma,
    Deterministic,
    Lognormal,
}

/// A positive distribution given by family, mean, and coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: DistributionFamily,
    pub mean: f64,
    pub cv: f64,
}

impl DistributionSpec {
    pub fn exponential(mean: f64) -> Self {
        Self { family: DistributionFamily::Exponential, mean, cv: 1.0 }
    }

    pub fn gamma(mean: f64, cv: f64) -> Self {
        Self { family: DistributionFamily::Gamma, mean, cv }
    }

    pub fn deterministic(mean: f64) -> Self {
        Self { family: DistributionFamily::Deterministic, mean, cv: 0.0 }
    }

    pub fn lognormal(mean: f64, cv: f64) -> Self {
        Self { family: DistributionFamily::Lognormal, mean, cv }
    }

    /// Rate `1/mean`.
    pub fn rate(&self) -> f64 {
        1.0 / self.mean
    }

    /// Checks the family/parameter consistency rules; returns problems found.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mean > 0.0) || !self.mean.is_finite() {
            out.push(format!("mean must be positive and finite, got {}", self.mean));
        }
        if !(self.cv >= 0.0) || !self.cv.is_finite() {
            out.push(format!("cv must be nonnegative and finite, got {}", self.cv));
        }
        match self.family {
            DistributionFamily::Deterministic if self.cv != 0.0 => {
                out.push(format!("deterministic family requires cv = 0, got {}", self.cv));
            }
            DistributionFamily::Exponential if self.cv != 1.0 => {
                out.push(format!("exponential family requires cv = 1, got {}", self.cv));
            }
            DistributionFamily::Gamma | DistributionFamily::Lognormal if self.cv == 0.0 => {
                out.push("gamma/lognormal family requires cv > 0 (use deterministic for cv = 0)".into());
            }
            _ => {}
        }
        out
    }

    /// Builds a moment-matched sampler for this spec.
    ///
    /// Gamma: shape = 1/cv², scale = mean·cv². Lognormal: σ² = ln(1+cv²),
    /// μ = ln(mean) − σ²/2.
    pub fn sampler(&self) -> Sampler {
        match self.family {
            DistributionFamily::Exponential => {
                Sampler::Exponential(rand_distr::Exp::new(1.0 / self.mean).expect("positive rate"))
            }
            DistributionFamily::Gamma => {
                let shape = 1.0 / (self.cv * self.cv);
                let scale = self.mean * self.cv * self.cv;
                Sampler::Gamma(rand_distr::Gamma::new(shape, scale).expect("valid gamma"))
            }
            DistributionFamily::Deterministic => Sampler::Deterministic(self.mean),
            DistributionFamily::Lognormal => {
                let sigma2 = (1.0 + self.cv * self.cv).ln();
                let mu = self.mean.ln() - sigma2 / 2.0;
                Sampler::Lognormal(rand_distr::LogNormal::new(mu, sigma2.sqrt()).expect("valid lognormal"))
            }
        }
    }
}

/// Prepared sampler for a [`DistributionSpec`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Exponential(rand_distr::Exp<f64>),
    Gamma(rand_distr::Gamma<f64>),
    Deterministic(f64),
    Lognormal(rand_distr::LogNormal<f64>),
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exponential(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Deterministic(m) => *m,
            Sampler::Lognormal(d) => d.sample(rng),
        }
    }
}
