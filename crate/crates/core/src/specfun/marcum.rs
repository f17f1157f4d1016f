//! Nuttall and first-order Marcum Q-functions by adaptive quadrature.
//!
//! `Q_{1,n}(a, b) = int_b^inf x exp(-(x^2 + a^2)/2) I_n(a x) dx`, and the
//! first-order Marcum function is the order-0 member of that family. The
//! integrand is evaluated as `x exp(-(x-a)^2/2) [e^{-ax} I_n(ax)]` so it stays
//! finite for large `a x`.

use super::bessel::{scaled_orders_into, scaled_unchecked};
use super::quad::{integrate, integrate_vec, QuadConfig};
use crate::error::{Error, Result};

const TAIL_BOUND: f64 = 1e-14;
const MAX_HALF_WIDTH: f64 = 40.0;

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    }
}

/// Bound on the mass the integrand puts beyond `centre + t` (and below
/// `alpha - t`), using `e^{-ax} I_n(ax) <= 1`.
fn tail_mass(alpha: f64, t: f64) -> f64 {
    let erfc = libm::erfc(t / std::f64::consts::SQRT_2);
    (-0.5 * t * t).exp() + alpha * (std::f64::consts::PI / 2.0).sqrt() * erfc
}

/// Integration window `[lo, hi]` for the order-`n` integrand above `beta`.
pub(crate) fn window(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let mut t = 8.0;
    while tail_mass(alpha, t) > TAIL_BOUND {
        t += 0.5;
        if t > MAX_HALF_WIDTH {
            return Err(Error::numeric(
                "nuttall_q",
                format!(
                    "tail bound {TAIL_BOUND:e} unattainable within half-width {MAX_HALF_WIDTH} \
                     (alpha={alpha}, beta={beta})"
                ),
            ));
        }
    }
    let lo = beta.max(alpha - t);
    let hi = beta.max(alpha) + t;
    Ok((lo, hi))
}

fn check(func: &'static str, alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::domain(func, format!("alpha must be finite and >= 0, got {alpha}")));
    }
    if !(beta >= 0.0) || beta.is_nan() {
        return Err(Error::domain(func, format!("beta must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Nuttall Q-function `Q_{1,n}(alpha, beta)`.
pub fn nuttall_q(order: u32, alpha: f64, beta: f64) -> Result<f64> {
    check("nuttall_q", alpha, beta)?;
    if beta.is_infinite() {
        return Ok(0.0);
    }
    if order > 0 && alpha == 0.0 {
        return Ok(0.0);
    }
    if order == 0 && beta == 0.0 {
        // total mass of a Rice density
        return Ok(1.0);
    }
    let (lo, hi) = window(alpha, beta)?;
    let r = integrate(
        |x| x * (-0.5 * (x - alpha) * (x - alpha)).exp() * scaled_unchecked(order, alpha * x),
        lo,
        hi,
        quad_cfg(),
    );
    if !r.converged {
        return Err(Error::numeric(
            "nuttall_q",
            format!(
                "quadrature did not converge: order={order} alpha={alpha} beta={beta} \
                 window=[{lo}, {hi}] estimate={} error={:e} evaluations={}",
                r.value, r.error, r.evaluations
            ),
        ));
    }
    Ok(r.value.max(0.0))
}

/// First-order Marcum Q-function `Q_1(alpha, beta)`, the order-0 Nuttall function.
pub fn marcum_q1(alpha: f64, beta: f64) -> Result<f64> {
    check("marcum_q1", alpha, beta)?;
    Ok(nuttall_q(0, alpha, beta)?.min(1.0))
}

/// All Nuttall functions `Q_{1,k}(alpha, beta)` for `k = 0..=max_order`,
/// from one shared quadrature.
pub fn nuttall_q_orders(max_order: u32, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check("nuttall_q_orders", alpha, beta)?;
    let dim = max_order as usize + 1;
    if beta.is_infinite() {
        return Ok(vec![0.0; dim]);
    }
    if alpha == 0.0 {
        let mut out = vec![0.0; dim];
        out[0] = (-0.5 * beta * beta).exp();
        return Ok(out);
    }
    let (lo, hi) = window(alpha, beta)?;
    let mut scaled = vec![0.0; dim];
    let r = integrate_vec(
        |x, out| {
            scaled_orders_into(alpha * x, &mut scaled);
            let w = x * (-0.5 * (x - alpha) * (x - alpha)).exp();
            for (o, s) in out.iter_mut().zip(&scaled) {
                *o = w * s;
            }
        },
        dim,
        lo,
        hi,
        quad_cfg(),
    );
    if !r.converged {
        return Err(Error::numeric(
            "nuttall_q_orders",
            format!(
                "quadrature did not converge: max_order={max_order} alpha={alpha} beta={beta} \
                 error={:e} evaluations={}",
                r.error, r.evaluations
            ),
        ));
    }
    let mut values = r.values;
    if beta == 0.0 {
        values[0] = 1.0;
    }
    Ok(values.into_iter().map(|v| v.max(0.0)).collect())
}

/// Rice density in the Marcum normalisation: `-d/dbeta Q_1(alpha, beta)`.
pub fn marcum_density(alpha: f64, beta: f64) -> f64 {
    if beta <= 0.0 {
        return 0.0;
    }
    beta * (-0.5 * (beta - alpha) * (beta - alpha)).exp() * scaled_unchecked(0, alpha * beta)
}
