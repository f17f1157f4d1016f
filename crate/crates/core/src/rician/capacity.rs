//! Outage percentiles and the capacities built on them.

use num_complex::Complex64;

use super::model::{posterior_params, PosteriorParams, RicePrior, TrainingConfig};
use crate::error::{Error, Result};
use crate::specfun::bessel::scaled_unchecked;
use crate::specfun::marcum::{marcum_density, marcum_q1, window};
use crate::specfun::quad::{integrate, QuadConfig};
use crate::specfun::expected_log2_affine;

/// Absolute tolerance on the percentile, in channel-gain units.
pub const PERCENTILE_TOL: f64 = 1e-10;

/// `Pr(|H| >= r | estimate)` for `H ~ CN(mean, variance)`.
pub fn magnitude_tail(r: f64, post: &PosteriorParams) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain("magnitude_tail", format!("r must be >= 0, got {r}")));
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    let s = (2.0 / post.variance).sqrt();
    marcum_q1(post.mean.norm() * s, r * s)
}

/// The `gamma`-percentile `r` of `|H|`: `Pr(|H| >= r) = 1 - gamma`.
///
/// A Newton iteration on the Marcum form, safeguarded by bisection on
/// `[0, |mean| + 10 sqrt(variance)]`, run until the bracket or the Newton
/// step is below [`PERCENTILE_TOL`].
pub fn percentile(gamma: f64, post: &PosteriorParams) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::domain(
            "percentile",
            format!("gamma must lie in [0, 1), got {gamma}"),
        ));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let target = 1.0 - gamma;
    let s = (2.0 / post.variance).sqrt();
    let a = post.mean.norm() * s;
    // also tight in b so the tail itself is reproduced to ~1e-10
    let tol_b = (PERCENTILE_TOL * s).min(1e-10);
    // work with b = r s, where the tail is Q1(a, b)
    let (mut lo, mut hi) = (0.0, a + 10.0 * std::f64::consts::SQRT_2);
    // seed from a Gaussian approximation of the magnitude (Rayleigh near a = 0)
    let mut b = (a + inv_normal_tail(target)).clamp(lo, hi);
    if a < 1.0 {
        b = (-2.0 * target.ln()).sqrt().clamp(lo, hi);
    }
    // one full tail evaluation, then the tail is carried along by integrating
    // the density across each step
    let mut q = marcum_q1(a, b)?;
    let mut q_at = b;
    for _ in 0..200 {
        if b != q_at {
            q -= density_increment(a, q_at, b)?;
            q_at = b;
        }
        let fb = q - target;
        if fb > 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let d = marcum_density(a, b);
        let mut next = if d > 0.0 { b + fb / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - b).abs();
        b = next;
        if step < tol_b || hi - lo < tol_b {
            break;
        }
    }
    Ok(b / s)
}

/// `int_from^to` of the Rice density in the Marcum normalisation.
fn density_increment(a: f64, from: f64, to: f64) -> Result<f64> {
    let (lo, hi, sign) = if from <= to { (from, to, 1.0) } else { (to, from, -1.0) };
    let r = integrate(|x| marcum_density(a, x), lo, hi, QuadConfig::default());
    if !r.converged {
        return Err(Error::numeric(
            "percentile",
            format!("density quadrature did not converge on [{lo}, {hi}] (a={a})"),
        ));
    }
    Ok(sign * r.value)
}

/// Rough `z` with `Pr(N(0,1) > z) = p`, only used as a Newton seed.
fn inv_normal_tail(p: f64) -> f64 {
    // Abramowitz-Stegun style rational approximation
    let q = if p < 0.5 { p } else { 1.0 - p };
    let t = (-2.0 * q.ln()).sqrt();
    let z = t - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
        / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    if p < 0.5 {
        z
    } else {
        -z
    }
}

/// `log2(1 + r_opt^2 power / noise_var)` given the posterior.
pub fn eio_capacity_post(
    gamma: f64,
    post: &PosteriorParams,
    power: f64,
    noise_var: f64,
) -> Result<f64> {
    check_power(power, noise_var)?;
    let r = percentile(gamma, post)?;
    Ok((r * r * power / noise_var).ln_1p() / std::f64::consts::LN_2)
}

/// EIO capacity for one estimate.
pub fn eio_capacity_point(
    gamma: f64,
    estimate: Complex64,
    power: f64,
    noise_var: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<f64> {
    eio_capacity_post(gamma, &posterior_params(estimate, prior, training), power, noise_var)
}

fn check_power(power: f64, noise_var: f64) -> Result<()> {
    if !(power >= 0.0) || !(noise_var > 0.0) {
        return Err(Error::domain(
            "capacity",
            format!("need power >= 0 and noise variance > 0, got {power}, {noise_var}"),
        ));
    }
    Ok(())
}

/// Capacity of the channel averaged over the posterior, with Gaussian input:
/// `log2(1 + |m|^2 P / (s2 + v P)) + log2(s2 + v P) - E[log2(s2 + v |x|^2)]`.
pub fn composite_capacity_post(post: &PosteriorParams, power: f64, noise_var: f64) -> Result<f64> {
    check_power(power, noise_var)?;
    if power == 0.0 {
        return Ok(0.0);
    }
    let v = post.variance;
    let first = composite_lower_bound_post(post, power, noise_var)?;
    let second = (noise_var + v * power).log2() - expected_log2_affine(noise_var, v, power)?;
    Ok(first + second.max(0.0))
}

pub fn composite_capacity_point(
    estimate: Complex64,
    power: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<f64> {
    composite_capacity_post(
        &posterior_params(estimate, prior, training),
        power,
        training.noise_var,
    )
}

/// `log2(1 + |m|^2 P / (s2 + v P))`, the Jensen lower bound.
pub fn composite_lower_bound_post(
    post: &PosteriorParams,
    power: f64,
    noise_var: f64,
) -> Result<f64> {
    check_power(power, noise_var)?;
    let snr = post.mean.norm_sqr() * power / (noise_var + post.variance * power);
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

pub fn composite_lower_bound(
    estimate: Complex64,
    power: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<f64> {
    composite_lower_bound_post(
        &posterior_params(estimate, prior, training),
        power,
        training.noise_var,
    )
}

/// `log2(1 + |h|^2 P / noise_var)`.
pub fn perfect_csi_rate(h: Complex64, power: f64, noise_var: f64) -> Result<f64> {
    check_power(power, noise_var)?;
    Ok((h.norm_sqr() * power / noise_var).ln_1p() / std::f64::consts::LN_2)
}

/// `E[log2(1 + |H|^2 P / noise_var)]` over the prior, by quadrature against
/// the Rice magnitude density.
pub fn mean_perfect_csi_capacity(prior: &RicePrior, power: f64, noise_var: f64) -> Result<f64> {
    check_power(power, noise_var)?;
    if power == 0.0 {
        return Ok(0.0);
    }
    // normalised magnitude x = |h| sqrt(2 / var) has density
    // x exp(-(x - a)^2 / 2) [e^{-ax} I0(ax)]
    let half_var = 0.5 * prior.variance;
    let a = prior.mean.norm() / half_var.sqrt();
    let (lo, hi) = window(a, 0.0)?;
    let g = power * half_var / noise_var;
    let res = integrate(
        |x| {
            let dens = x * (-0.5 * (x - a) * (x - a)).exp() * scaled_unchecked(0, a * x);
            dens * (g * x * x).ln_1p()
        },
        lo,
        hi,
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_intervals: 2000,
        },
    );
    if !res.converged {
        return Err(Error::numeric(
            "mean_perfect_csi_capacity",
            format!("quadrature did not converge: error {:e}", res.error),
        ));
    }
    Ok(res.value / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(re: f64, im: f64, v: f64) -> PosteriorParams {
        PosteriorParams::new(Complex64::new(re, im), v, 0.5).unwrap()
    }

    #[test]
    fn tail_endpoints() {
        let p = post(0.7, 0.1, 0.3);
        assert_eq!(magnitude_tail(0.0, &p).unwrap(), 1.0);
        assert!(magnitude_tail(30.0, &p).unwrap() < 1e-300);
    }

    #[test]
    fn percentile_round_trip() {
        for (re, v) in [(1.0, 0.5), (0.0, 1.0), (3.0, 1e-3), (0.2, 4.0)] {
            let p = post(re, 0.0, v);
            for g in [0.001, 0.01, 0.1, 0.5, 0.9] {
                let r = percentile(g, &p).unwrap();
                let t = magnitude_tail(r, &p).unwrap();
                assert!((t - (1.0 - g)).abs() < 1e-9, "re={re} v={v} g={g}: {t}");
            }
        }
    }

    #[test]
    fn percentile_of_rayleigh_is_closed_form() {
        // zero mean: tail exp(-r^2 / v)
        let p = post(0.0, 0.0, 2.0);
        let r = percentile(0.01, &p).unwrap();
        assert!((r - (-2.0 * 0.99f64.ln()).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn gamma_zero_and_one() {
        let p = post(1.0, 0.0, 0.5);
        assert_eq!(percentile(0.0, &p).unwrap(), 0.0);
        assert!(percentile(1.0, &p).is_err());
    }

    #[test]
    fn arithmetic_cases() {
        assert_eq!(perfect_csi_rate(Complex64::new(0.0, 0.0), 5.0, 1.0).unwrap(), 0.0);
        let r = perfect_csi_rate(Complex64::new(1.0, 0.0), 3.0, 1.0).unwrap();
        assert!((r - 2.0).abs() < 1e-15);
    }

    #[test]
    fn composite_exceeds_lower_bound() {
        let p = post(0.8, -0.4, 0.3);
        for pw in [0.1, 1.0, 10.0, 300.0] {
            let c = composite_capacity_post(&p, pw, 1.0).unwrap();
            let l = composite_lower_bound_post(&p, pw, 1.0).unwrap();
            assert!(c >= l);
        }
    }

    #[test]
    fn rayleigh_mean_capacity() {
        // E[ln(1 + g E)] = e^{1/g} E1(1/g) for E ~ Exp(1)
        let prior = RicePrior::new(Complex64::new(0.0, 0.0), 1.0).unwrap();
        let c = mean_perfect_csi_capacity(&prior, 2.0, 1.0).unwrap();
        let exact = crate::specfun::exp_integral_e1_scaled(0.5).unwrap() / std::f64::consts::LN_2;
        assert!((c - exact).abs() < 1e-10);
    }
}
