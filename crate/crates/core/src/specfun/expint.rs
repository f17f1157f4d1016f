//! Exponential integral `E1` and the Gaussian log-expectation built on it.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(z) = int_z^inf e^-t / t dt` for `z > 0`.
pub fn exp_integral_e1(z: f64) -> Result<f64> {
    check(z)?;
    if z <= 1.0 {
        Ok(e1_series(z))
    } else {
        Ok(e1_scaled_cf(z) * (-z).exp())
    }
}

/// `e^z E1(z)`, which stays representable for large `z` (it tends to `1/z`).
pub fn exp_integral_e1_scaled(z: f64) -> Result<f64> {
    check(z)?;
    if z <= 1.0 {
        Ok(e1_series(z) * z.exp())
    } else {
        Ok(e1_scaled_cf(z))
    }
}

fn check(z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::domain(
            "exp_integral_e1",
            format!("argument must be positive, got {z}"),
        ));
    }
    Ok(())
}

fn e1_series(z: f64) -> f64 {
    // E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    let mut sum = 0.0;
    let mut fact_term = 1.0; // (-z)^k / k!
    for k in 1..60 {
        fact_term *= -z / k as f64;
        let term = fact_term / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Modified Lentz evaluation of the continued fraction for `e^z E1(z)`, z > 1.
fn e1_scaled_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `E[log2(a + b |x|^2)]` for `x ~ CN(0, p)`.
///
/// `|x|^2` is exponential with mean `p`, which gives
/// `log2(a) + log2(e) e^{a/(bp)} E1(a/(bp))` when `b > 0`.
pub fn expected_log2_affine(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(a > 0.0) || !(b >= 0.0) || !(p > 0.0) {
        return Err(Error::domain(
            "expected_log2_affine",
            format!("need a > 0, b >= 0, p > 0; got a={a}, b={b}, p={p}"),
        ));
    }
    if b == 0.0 {
        return Ok(a.log2());
    }
    let z = a / (b * p);
    if z.is_infinite() {
        return Ok(a.log2());
    }
    Ok(a.log2() + std::f64::consts::LOG2_E * exp_integral_e1_scaled(z)?)
}
