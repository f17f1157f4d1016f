//! Monte Carlo check that the EIO rate fails on a fraction `gamma` of the
//! channels drawn from the posterior.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rician::{eio_capacity_point, perfect_csi_rate, posterior_params, RicePrior, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub fraction: f64,
    /// Binomial standard error `sqrt(f (1 - f) / n)`.
    pub std_err: f64,
    pub draws: usize,
}

/// Fraction of posterior draws `H` whose perfect-CSI rate falls below the
/// EIO rate of `estimate`.
pub fn empirical_outage(
    gamma: f64,
    estimate: Complex64,
    power: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    empirical_outage_stats(gamma, estimate, power, prior, training, draws, seed).map(|o| o.fraction)
}

pub fn empirical_outage_stats(
    gamma: f64,
    estimate: Complex64,
    power: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
    draws: usize,
    seed: u64,
) -> Result<OutageEstimate> {
    if draws == 0 {
        return Err(Error::invalid("draws", "need at least one draw"));
    }
    let noise = training.noise_var;
    let rate = eio_capacity_point(gamma, estimate, power, noise, prior, training)?;
    let post = posterior_params(estimate, prior, training);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = 0usize;
    for _ in 0..draws {
        if perfect_csi_rate(post.sample(&mut rng), power, noise)? < rate {
            fails += 1;
        }
    }
    let f = fails as f64 / draws as f64;
    Ok(OutageEstimate {
        fraction: f,
        std_err: (f * (1.0 - f) / draws as f64).sqrt(),
        draws,
    })
}
