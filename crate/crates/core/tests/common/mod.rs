//! Reference computations for the integration tests. Nothing here calls into
//! the special-function or optimisation code of the library.

#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use eio_lab::dmc::{Channel, DiscreteScenario};

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        // stop once the requested tolerance is below round-off of the panel
        if depth == 0 || diff.abs() <= 15.0 * tol || diff.abs() <= 1e-15 * whole.abs() {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Splits `[a, b]` into `pieces` and integrates each adaptively.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| adaptive_simpson(f, a + k as f64 * h, a + (k + 1) as f64 * h, tol / pieces as f64))
        .sum()
}

/// `int_b^inf x exp(-(x - c)^2 / 2) dx`.
fn radial_tail(b: f64, c: f64) -> f64 {
    (-0.5 * (b - c) * (b - c)).exp() + c * (PI / 2.0).sqrt() * libm::erfc((b - c) / SQRT_2)
}

/// `int_b^inf x exp(-(x^2 + a^2)/2) I_n(a x) dx`, by writing `I_n` as an
/// angular integral and doing the radial part in closed form.
pub fn nuttall_oracle(n: u32, a: f64, b: f64) -> f64 {
    let f = |t: f64| {
        let c = a * t.cos();
        let s = a * t.sin();
        (n as f64 * t).cos() * (-0.5 * s * s).exp() * radial_tail(b, c)
    };
    integrate(&f, 0.0, PI, 16, 1e-13) / PI
}

pub fn marcum_oracle(a: f64, b: f64) -> f64 {
    nuttall_oracle(0, a, b)
}

/// `E1(z) = int_0^1 exp(-z/u) / u du`.
pub fn e1_oracle(z: f64) -> f64 {
    let f = |u: f64| if u > 0.0 { (-z / u).exp() / u } else { 0.0 };
    // the integrand peaks near u = z, so resolve [0, 2z] separately
    let split = (2.0 * z).min(0.5);
    integrate(&f, 0.0, split, 32, 1e-13) + integrate(&f, split, 1.0, 32, 1e-13)
}

/// Probability that `H ~ CN(mean, var)` lands in
/// `{ |h| >= r, |arg h - centre| <= phi }`. Along each ray the density is a
/// shifted Gaussian in the radius, so the radial integral is closed form and
/// only the angle is integrated numerically.
pub fn sector_oracle(mean: (f64, f64), var: f64, r: f64, phi: f64, centre: f64) -> f64 {
    let (mx, my) = mean;
    let m2 = mx * mx + my * my;
    let s = (2.0 / var).sqrt();
    let angular = |t: f64| {
        let (sin, cos) = t.sin_cos();
        let c = mx * cos + my * sin;
        (-(m2 - c * c) / var).exp() * radial_tail(r * s, c * s) / (2.0 * PI)
    };
    integrate(&angular, centre - phi, centre + phi, 16, 1e-12)
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

pub fn bsc_capacity(p: f64) -> f64 {
    1.0 - binary_entropy(p)
}

/// `I(P, W)` in bits, straight from the definition.
pub fn mutual_info(p: &[f64], w: &[Vec<f64>]) -> f64 {
    let ny = w[0].len();
    let q: Vec<f64> = (0..ny).map(|y| p.iter().zip(w).map(|(px, row)| px * row[y]).sum()).collect();
    let mut i = 0.0;
    for (px, row) in p.iter().zip(w) {
        for (y, &wy) in row.iter().enumerate() {
            if *px > 0.0 && wy > 0.0 {
                i += px * wy * (wy / q[y]).log2();
            }
        }
    }
    i
}

/// Brute-force EIO rate of a plain two-input family: every subset with
/// posterior mass at least `1 - gamma`, every input on a grid of `step`.
pub fn eio_grid_oracle(channels: &[Vec<Vec<f64>>], posterior: &[f64], gamma: f64, step: f64) -> f64 {
    let n = channels.len();
    let k = (1.0 / step).round() as usize;
    let mut best = 0.0f64;
    for mask in 1u32..(1 << n) {
        let mass: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| posterior[i]).sum();
        if mass < 1.0 - gamma - 1e-12 {
            continue;
        }
        for j in 0..=k {
            let p0 = j as f64 / k as f64;
            let p = [p0, 1.0 - p0];
            let worst = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| mutual_info(&p, &channels[i]))
                .fold(f64::INFINITY, f64::min);
            best = best.max(worst);
        }
    }
    best
}

pub fn bsc(p: f64) -> Vec<Vec<f64>> {
    vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
}

pub fn plain_scenario(channels: &[Vec<Vec<f64>>], posterior: Vec<f64>, gamma: f64) -> DiscreteScenario {
    DiscreteScenario::plain(channels, posterior, gamma).expect("valid scenario")
}

pub fn to_channel(rows: &[Vec<f64>]) -> Channel {
    let data: Vec<f64> = rows.iter().flatten().copied().collect();
    Channel::new(rows.len(), rows[0].len(), data)
}

/// Linear interpolation for the SNR at which an increasing series reaches
/// `target`.
pub fn crossing(snr: &[f64], rate: &[f64], target: f64) -> Option<f64> {
    for k in 1..snr.len() {
        if rate[k - 1] < target && rate[k] >= target {
            let t = (target - rate[k - 1]) / (rate[k] - rate[k - 1]);
            return Some(snr[k - 1] + t * (snr[k] - snr[k - 1]));
        }
    }
    None
}
