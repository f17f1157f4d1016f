//! Mean EIO capacities under perfect and rate-limited feedback.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::power::{waterfill_levels, PowerPolicy, WaterfillMode};
use super::quantizer::{lloyd_max_design, QuantizerCodebook};
use crate::error::{Error, Result};
use crate::rician::{percentile, posterior_params, sample_estimate_marginal, PosteriorParams, RicePrior, TrainingConfig};

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub draws: usize,
}

impl MeanEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_err: 0.0,
            draws: 0,
        }
    }

    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            draws: n,
        }
    }
}

/// Where the transmitter's side information comes from.
#[derive(Debug, Clone, Copy)]
pub enum EstimateLaw<'a> {
    /// Seeded draws of the unquantized estimate from its marginal law.
    Sampled { draws: usize },
    /// The cells of a feedback codebook with their probabilities.
    Codebook(&'a QuantizerCodebook),
}

/// Posterior of `H` given the fed-back codepoint: mean
/// `delta h_tilde + (1 - delta) mu_H`, variance `delta (s_eps^2 + delta s_Q^2)`.
pub fn quantized_posterior(
    codepoint: Complex64,
    codebook: &QuantizerCodebook,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<PosteriorParams> {
    if codebook.position(codepoint).is_none() {
        return Err(Error::invalid("codepoint", format!("{codepoint} is not in the codebook")));
    }
    Ok(quantized_posterior_unchecked(codepoint, codebook.distortion, prior, training))
}

fn quantized_posterior_unchecked(
    codepoint: Complex64,
    distortion: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> PosteriorParams {
    let p = posterior_params(codepoint, prior, training);
    PosteriorParams {
        variance: p.variance + p.delta * p.delta * distortion,
        ..p
    }
}

/// Draws `n` estimates from `CN(mu_H, sigma_H^2 + sigma_eps^2)`.
pub fn draw_estimates<R: Rng + ?Sized>(
    prior: &RicePrior,
    training: &TrainingConfig,
    n: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    (0..n).map(|_| sample_estimate_marginal(prior, training, rng)).collect()
}

/// `r*(gamma, h_hat)` for each estimate.
pub fn worst_case_gains(
    gamma: f64,
    estimates: &[Complex64],
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<Vec<f64>> {
    estimates
        .par_iter()
        .map(|&h| percentile(gamma, &posterior_params(h, prior, training)))
        .collect()
}

fn log_rate(r: f64, power: f64, noise_var: f64) -> f64 {
    (r * r * power / noise_var).ln_1p() / std::f64::consts::LN_2
}

/// Mean of `log2(1 + r^2 P / s2)` over equally likely atoms, after
/// allocating `budget` across them.
pub fn mean_rate_with_allocation(
    r_star: &[f64],
    budget: f64,
    noise_var: f64,
    mode: WaterfillMode,
) -> Result<(MeanEstimate, PowerPolicy)> {
    let w = vec![1.0 / r_star.len() as f64; r_star.len()];
    let policy = waterfill_levels(r_star, &w, budget, noise_var, mode)?;
    let rates: Vec<f64> = r_star
        .iter()
        .zip(&policy.table)
        .map(|(&r, &p)| log_rate(r, p, noise_var))
        .collect();
    Ok((MeanEstimate::from_samples(&rates), policy))
}

/// Allocation for the given law of transmitter-side information.
pub fn waterfill(
    gamma: f64,
    law: EstimateLaw<'_>,
    budget: f64,
    mode: WaterfillMode,
    prior: &RicePrior,
    training: &TrainingConfig,
    seed: u64,
) -> Result<PowerPolicy> {
    match law {
        EstimateLaw::Sampled { draws } => {
            check_draws(draws)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let est = draw_estimates(prior, training, draws, &mut rng);
            let r = worst_case_gains(gamma, &est, prior, training)?;
            Ok(mean_rate_with_allocation(&r, budget, training.noise_var, mode)?.1)
        }
        EstimateLaw::Codebook(book) => {
            let r = codebook_gains(gamma, book, prior, training)?;
            waterfill_levels(&r, &book.cell_probs, budget, training.noise_var, mode)
        }
    }
}

fn check_draws(draws: usize) -> Result<()> {
    if draws == 0 {
        return Err(Error::invalid("draws", "need at least one draw"));
    }
    Ok(())
}

/// `E[log2(1 + r*(gamma, H_hat)^2 P(H_hat) / s2)]` over `draws` seeded
/// estimates, with the allocation chosen by `mode`.
pub fn mean_eio_perfect_feedback(
    gamma: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
    budget: f64,
    mode: WaterfillMode,
    draws: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_draws(draws)?;
    if budget == 0.0 {
        return Ok(MeanEstimate::exact(0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = draw_estimates(prior, training, draws, &mut rng);
    let r = worst_case_gains(gamma, &est, prior, training)?;
    Ok(mean_rate_with_allocation(&r, budget, training.noise_var, mode)?.0)
}

/// Worst-case gain for each codepoint; cells of zero probability get 0.
pub fn codebook_gains(
    gamma: f64,
    book: &QuantizerCodebook,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<Vec<f64>> {
    book.points
        .par_iter()
        .zip(&book.cell_probs)
        .map(|(&h, &p)| {
            if p > 0.0 {
                percentile(gamma, &quantized_posterior_unchecked(h, book.distortion, prior, training))
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// `sum_i log2(1 + r*(gamma, h_i)^2 P_i / s2) Pr(h_i)` with `P_i` from
/// water-filling over the codebook. The standard error treats the cell
/// probabilities as frequencies over `prob_draws` draws.
pub fn mean_eio_quantized(
    gamma: f64,
    codebook: &QuantizerCodebook,
    budget: f64,
    mode: WaterfillMode,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<MeanEstimate> {
    if budget == 0.0 {
        return Ok(MeanEstimate::exact(0.0));
    }
    let r = codebook_gains(gamma, codebook, prior, training)?;
    let policy = waterfill_levels(&r, &codebook.cell_probs, budget, training.noise_var, mode)?;
    let (mut m1, mut m2) = (0.0, 0.0);
    for ((&ri, &pi), &wi) in r.iter().zip(&policy.table).zip(&codebook.cell_probs) {
        let c = log_rate(ri, pi, training.noise_var);
        m1 += wi * c;
        m2 += wi * c * c;
    }
    let n = codebook.prob_draws as usize;
    let std_err = if n > 0 { ((m2 - m1 * m1).max(0.0) / n as f64).sqrt() } else { 0.0 };
    Ok(MeanEstimate {
        mean: m1,
        std_err,
        draws: n,
    })
}

/// Designs a feedback codebook on `design_draws` estimates and measures its
/// cell probabilities on `holdout_draws` further ones.
pub fn design_feedback_codebook(
    prior: &RicePrior,
    training: &TrainingConfig,
    rate_bits: u32,
    design_draws: usize,
    holdout_draws: usize,
    seed: u64,
) -> Result<QuantizerCodebook> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = draw_estimates(prior, training, design_draws, &mut rng);
    let mut book = lloyd_max_design(&design, rate_bits, seed)?;
    rng.set_stream(1);
    let holdout = draw_estimates(prior, training, holdout_draws, &mut rng);
    book.estimate_cell_probs(&holdout)?;
    Ok(book)
}

/// Ergodic capacity with perfect CSI at both ends and a long-term power
/// budget, `E[log2(1 + |H|^2 P(H) / s2)]` with water-filling over `|H|`.
pub fn mean_ergodic_capacity(
    prior: &RicePrior,
    budget: f64,
    noise_var: f64,
    draws: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_draws(draws)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: Vec<f64> = (0..draws).map(|_| prior.sample(&mut rng).norm()).collect();
    Ok(mean_rate_with_allocation(&r, budget, noise_var, WaterfillMode::Kkt)?.0)
}
