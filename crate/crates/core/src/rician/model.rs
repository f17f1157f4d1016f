//! Channel prior, pilot training, and the posterior law of the fading
//! coefficient given its estimate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circularly-symmetric complex Gaussian prior `H ~ CN(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicePrior {
    pub mean: Complex64,
    pub variance: f64,
}

impl RicePrior {
    pub fn new(mean: Complex64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::domain(
                "RicePrior::new",
                format!("variance must be positive and finite, got {variance}"),
            ));
        }
        if !mean.re.is_finite() || !mean.im.is_finite() {
            return Err(Error::domain("RicePrior::new", "mean must be finite"));
        }
        Ok(Self { mean, variance })
    }

    /// Prior with a real, positive line-of-sight mean and the given Rice
    /// factor (linear scale).
    pub fn from_rice_factor(mean_magnitude: f64, rice_factor: f64) -> Result<Self> {
        if !(rice_factor > 0.0) {
            return Err(Error::domain(
                "RicePrior::from_rice_factor",
                format!("Rice factor must be positive, got {rice_factor}"),
            ));
        }
        Self::new(
            Complex64::new(mean_magnitude, 0.0),
            mean_magnitude * mean_magnitude / rice_factor,
        )
    }

    /// `K_H = |mean|^2 / variance`.
    pub fn rice_factor(&self) -> f64 {
        self.mean.norm_sqr() / self.variance
    }

    /// Draws one channel coefficient from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.mean + complex_normal(rng, self.variance)
    }
}

/// Pilot-based training: `n_pilots` symbols at power `pilot_power` through
/// noise of variance `noise_var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub n_pilots: u32,
    pub pilot_power: f64,
    pub noise_var: f64,
}

impl TrainingConfig {
    pub fn new(n_pilots: u32, pilot_power: f64, noise_var: f64) -> Result<Self> {
        if n_pilots == 0 {
            return Err(Error::domain("TrainingConfig::new", "need at least one pilot"));
        }
        if !(pilot_power > 0.0) || !(noise_var > 0.0) {
            return Err(Error::domain(
                "TrainingConfig::new",
                format!("pilot power and noise variance must be positive (got {pilot_power}, {noise_var})"),
            ));
        }
        Ok(Self {
            n_pilots,
            pilot_power,
            noise_var,
        })
    }

    /// Training SNR `N P_T / sigma_Z^2`.
    pub fn snr(&self) -> f64 {
        self.n_pilots as f64 * self.pilot_power / self.noise_var
    }

    /// Variance of the ML estimation error, `1 / snr`.
    pub fn error_var(&self) -> f64 {
        1.0 / self.snr()
    }

    /// Draws an estimate `H + E` for the true coefficient `h`.
    pub fn sample_estimate<R: Rng + ?Sized>(&self, h: Complex64, rng: &mut R) -> Complex64 {
        h + complex_normal(rng, self.error_var())
    }
}

/// Posterior law `CN(mean, variance)` of the channel given an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorParams {
    pub mean: Complex64,
    pub variance: f64,
    /// MMSE shrinkage weight on the estimate.
    pub delta: f64,
}

impl PosteriorParams {
    /// Posterior with explicitly given moments; `delta` is informational.
    pub fn new(mean: Complex64, variance: f64, delta: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::domain(
                "PosteriorParams::new",
                format!("variance must be positive and finite, got {variance}"),
            ));
        }
        if !mean.re.is_finite() || !mean.im.is_finite() {
            return Err(Error::domain("PosteriorParams::new", "mean must be finite"));
        }
        Ok(Self {
            mean,
            variance,
            delta,
        })
    }

    /// The prior itself, i.e. what is known without any usable estimate.
    pub fn from_prior(prior: &RicePrior) -> Self {
        Self {
            mean: prior.mean,
            variance: prior.variance,
            delta: 0.0,
        }
    }

    /// `|mean| sqrt(2 / variance)`: the Marcum non-centrality of `|H|`.
    pub fn marcum_alpha(&self) -> f64 {
        self.mean.norm() * (2.0 / self.variance).sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.mean + complex_normal(rng, self.variance)
    }
}

/// MMSE shrinkage `delta = snr_t sigma_H^2 / (snr_t sigma_H^2 + 1)`.
pub fn shrinkage(prior: &RicePrior, training: &TrainingConfig) -> f64 {
    let s = training.snr() * prior.variance;
    s / (s + 1.0)
}

/// Posterior of `H` given the estimate: mean `delta h_hat + (1 - delta) mu_H`,
/// variance `delta sigma_eps^2`.
pub fn posterior_params(
    estimate: Complex64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> PosteriorParams {
    let delta = shrinkage(prior, training);
    // delta * sigma_eps^2 written so that it stays accurate for tiny snr_t
    let variance = prior.variance / (training.snr() * prior.variance + 1.0);
    PosteriorParams {
        mean: estimate * delta + prior.mean * (1.0 - delta),
        variance,
        delta,
    }
}

/// Marginal law of the estimate, `CN(mu_H, sigma_H^2 + sigma_eps^2)`.
pub fn sample_estimate_marginal<R: Rng + ?Sized>(
    prior: &RicePrior,
    training: &TrainingConfig,
    rng: &mut R,
) -> Complex64 {
    prior.mean + complex_normal(rng, prior.variance + training.error_var())
}

/// One draw of `CN(0, variance)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}
