//! Modified Bessel functions of the first kind, integer order, real argument.
//!
//! Small arguments use the ascending power series
//! `I_n(x) = sum_k (x/2)^(n+2k) / (k! (n+k)!)`. Above [`SERIES_LIMIT`] the
//! exponentially scaled value `e^-x I_n(x)` is built from the Hankel
//! asymptotic expansion of `I_0` and Miller's backward recurrence, so nothing
//! overflows for large `x`.

use std::cell::Cell;

use crate::error::{Error, Result};

thread_local! {
    static PERTURBATION: Cell<f64> = const { Cell::new(0.0) };
}

/// Runs `f` with every scaled Bessel value on this thread multiplied by
/// `1 + eps`. Fault-injection hook for the self-test.
#[doc(hidden)]
pub fn with_perturbation<R>(eps: f64, f: impl FnOnce() -> R) -> R {
    let old = PERTURBATION.with(|p| p.replace(eps));
    let out = f();
    PERTURBATION.with(|p| p.set(old));
    out
}

fn perturbation() -> f64 {
    PERTURBATION.with(Cell::get)
}

/// Arguments above this use the scaled asymptotic route.
pub const SERIES_LIMIT: f64 = 50.0;

/// `I_n(x)`. Overflows to `+inf` once `x` exceeds roughly 713.
pub fn bessel_i(order: u32, x: f64) -> Result<f64> {
    check_arg(x)?;
    if x <= SERIES_LIMIT {
        Ok(series(order, x) * (1.0 + perturbation()))
    } else {
        Ok((x + scaled_unchecked(order, x).ln()).exp())
    }
}

/// `e^-x I_n(x)`, finite for every `x >= 0`.
pub fn bessel_i_scaled(order: u32, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(scaled_unchecked(order, x))
}

/// `ln I_n(x)`; `-inf` when `I_n(x) = 0` (positive order at `x = 0`).
pub fn ln_bessel_i(order: u32, x: f64) -> Result<f64> {
    check_arg(x)?;
    Ok(x + scaled_unchecked(order, x).ln())
}

fn check_arg(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "bessel_i",
            format!("argument must be finite and non-negative, got {x}"),
        ));
    }
    Ok(())
}

pub(crate) fn scaled_unchecked(order: u32, x: f64) -> f64 {
    let v = if x <= SERIES_LIMIT {
        series(order, x) * (-x).exp()
    } else {
        scaled_large(order, x)
    };
    v * (1.0 + perturbation())
}

/// Ascending series. Terms are summed until the next one drops below
/// 1e-17 of the running sum while the term ratio is already below 1/2, which
/// bounds the relative tail by 1e-17.
fn series(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let n = order as f64;
    let half = 0.5 * x;
    let first = if order < 64 {
        let mut t = 1.0;
        for k in 1..=order {
            t *= half / k as f64;
        }
        t
    } else {
        (n * half.ln() - libm::lgamma(n + 1.0)).exp()
    };
    if first == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut term = first;
    let mut sum = first;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let ratio = q / (k * (n + k));
        term *= ratio;
        sum += term;
        if ratio < 0.5 && term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `e^-x I_0(x)` from the Hankel expansion; accurate to rounding for x > 50.
fn scaled_i0_asymptotic(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= odd * odd / (8.0 * k as f64 * x);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

fn scaled_large(order: u32, x: f64) -> f64 {
    let i0 = scaled_i0_asymptotic(x);
    if order == 0 {
        return i0;
    }
    let mut out = vec![0.0; order as usize + 1];
    miller_ratios(order as usize, x, &mut out);
    out[order as usize] * i0
}

/// Starting index for the backward recurrence. The ratio `I_k / I_0` decays
/// like `exp(-k^2 / 2x)` for large `x` and factorially for small `x`, so this
/// start sits far beyond where any requested order is significant.
fn miller_start(max_order: usize, x: f64) -> usize {
    max_order + 30 + (10.0 * x.sqrt()).ceil() as usize
}

/// Fills `out[k] = I_k(x) / I_0(x)` for `k = 0..=max_order` (requires x > 0).
fn miller_ratios(max_order: usize, x: f64, out: &mut [f64]) {
    debug_assert!(x > 0.0 && out.len() > max_order);
    let start = miller_start(max_order, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // I_{k+1}
    let mut cur = 1e-300; // I_k
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * cur + next;
        next = cur;
        cur = prev;
        if k - 1 <= max_order {
            out[k - 1] = cur;
        }
        if cur > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            for v in out.iter_mut().take(max_order + 1) {
                *v *= 1e-250;
            }
        }
    }
    let i0 = out[0];
    for v in out.iter_mut().take(max_order + 1) {
        *v /= i0;
    }
}

/// Scaled values `e^-x I_k(x)` for every order `k = 0..=max_order`.
pub fn bessel_i_scaled_orders(max_order: u32, x: f64) -> Result<Vec<f64>> {
    check_arg(x)?;
    let mut out = vec![0.0; max_order as usize + 1];
    scaled_orders_into(x, &mut out);
    Ok(out)
}

/// Writes `e^-x I_k(x)` for `k = 0..out.len()` into `out`.
pub(crate) fn scaled_orders_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    if x == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = 1.0;
        return;
    }
    let max_order = out.len() - 1;
    let i0 = scaled_unchecked(0, x);
    if max_order == 0 {
        out[0] = i0;
        return;
    }
    miller_ratios(max_order, x, out);
    // i0 already carries any injected perturbation
    for v in out.iter_mut() {
        *v *= i0;
    }
}
