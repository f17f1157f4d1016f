//! Built-in invariant checks, each against a route that shares no code with
//! the function under test.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::dmc::{eio_capacity_discrete, DiscreteScenario};
use crate::feedback::{lloyd_max_design_traced, waterfill_levels, WaterfillMode};
use crate::harness::empirical_outage_stats;
use crate::rician::{
    composite_capacity_post, composite_lower_bound_post, complex_normal, eio_capacity_point,
    eio_ml_capacity_post, posterior_params, MlConfig, PosteriorParams, RicePrior,
    TrainingConfig,
};
use crate::specfun::{
    bessel_i_scaled, exp_integral_e1, marcum_q1, nuttall_q, sector_mass, sector_mass_about,
    sector_mass_quadrature, SectorRegion,
};

pub const TWO_BSC: &str = include_str!("../../data/two_bsc.json");

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("bessel_vs_angle_integral", bessel_check),
    ("marcum_vs_radial_integral", marcum_check),
    ("nuttall_vs_radial_integral", nuttall_check),
    ("e1_vs_integral", e1_check),
    ("sector_full_circle_is_marcum", sector_circle_check),
    ("sector_series_vs_quadrature", sector_routes_check),
    ("posterior_invariants", posterior_check),
    ("composite_above_lower_bound", composite_check),
    ("ml_rate_below_eio", ml_check),
    ("outage_identity", outage_check),
    ("dmc_two_bsc_worked_example", dmc_check),
    ("waterfill_budget", waterfill_check),
    ("lloyd_monotone", lloyd_check),
];

/// Runs every check; `bessel_fault` multiplies all Bessel values by
/// `1 + eps` for the duration, to confirm the suite notices.
pub fn run_selftest(bessel_fault: Option<f64>) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let t = Instant::now();
            let out = match bessel_fault {
                Some(eps) => crate::specfun::bessel::with_perturbation(eps, check),
                None => check(),
            };
            let (passed, detail) = match out {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckResult {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `e^{-x} I_n(x) = (1/pi) int_0^pi e^{x (cos t - 1)} cos(n t) dt`; the
/// trapezoid rule is spectrally accurate for this periodic integrand.
fn i_scaled_oracle(n: u32, x: f64) -> f64 {
    let m = 2000;
    let h = PI / m as f64;
    let f = |t: f64| (x * (t.cos() - 1.0)).exp() * (n as f64 * t).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for k in 1..m {
        s += f(k as f64 * h);
    }
    s * h / PI
}

fn nuttall_oracle(n: u32, a: f64, b: f64) -> f64 {
    let hi = a.max(b) + 14.0;
    simpson(
        |x| x * (-0.5 * (x - a) * (x - a)).exp() * i_scaled_oracle(n, a * x),
        b,
        hi.max(b),
        4000,
    )
}

fn worst(diffs: impl Iterator<Item = f64>) -> f64 {
    diffs.fold(0.0, f64::max)
}

fn bessel_check() -> Result<String, String> {
    let mut d = 0.0f64;
    for &x in &[0.1, 1.0, 7.5, 30.0, 120.0] {
        for n in [0, 1, 3] {
            let v = bessel_i_scaled(n, x).map_err(|e| e.to_string())?;
            d = d.max((v - i_scaled_oracle(n, x)).abs());
        }
    }
    if d < 1e-12 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-12"))
    }
}

fn marcum_check() -> Result<String, String> {
    let cases = [(0.0, 1.0), (1.0, 1.0), (2.5, 1.0), (3.0, 4.5), (6.0, 5.0)];
    let d = worst(cases.iter().map(|&(a, b)| {
        (marcum_q1(a, b).unwrap_or(f64::NAN) - nuttall_oracle(0, a, b)).abs()
    }));
    if d < 1e-8 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-8"))
    }
}

fn nuttall_check() -> Result<String, String> {
    let cases = [(1, 1.0, 1.0), (2, 2.0, 0.5), (4, 3.0, 3.0)];
    let d = worst(cases.iter().map(|&(n, a, b)| {
        (nuttall_q(n, a, b).unwrap_or(f64::NAN) - nuttall_oracle(n, a, b)).abs()
    }));
    if d < 1e-8 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-8"))
    }
}

fn e1_check() -> Result<String, String> {
    // E1(z) = int_0^1 exp(-z/u) / u du
    let d = worst([0.05, 0.5, 1.0, 3.0, 10.0].iter().map(|&z| {
        let oracle = simpson(|u| if u > 0.0 { (-z / u).exp() / u } else { 0.0 }, 0.0, 1.0, 200_000);
        (exp_integral_e1(z).unwrap_or(f64::NAN) - oracle).abs()
    }));
    if d < 1e-8 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-8"))
    }
}

fn sample_posts() -> Vec<PosteriorParams> {
    [(1.0, 0.2, 0.5), (0.3, -0.4, 1.5), (2.0, 1.0, 0.1), (0.0, 0.0, 1.0)]
        .iter()
        .map(|&(re, im, v)| PosteriorParams::new(Complex64::new(re, im), v, 0.5).unwrap())
        .collect()
}

fn sector_circle_check() -> Result<String, String> {
    let mut d = 0.0f64;
    for post in sample_posts() {
        for r in [0.0, 0.3, 1.0, 2.0] {
            let full = sector_mass(SectorRegion { r_min: r, phi_eps: PI }, &post).map_err(|e| e.to_string())?;
            let s = (2.0 / post.variance).sqrt();
            let q = nuttall_oracle(0, post.mean.norm() * s, r * s);
            d = d.max((full - q).abs());
        }
    }
    if d < 1e-8 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-8"))
    }
}

fn sector_routes_check() -> Result<String, String> {
    let mut d = 0.0f64;
    for post in sample_posts() {
        for (r, phi, c) in [(0.2, 0.4, 0.1), (1.0, 1.0, -0.3), (0.5, 2.0, 0.7)] {
            let region = SectorRegion { r_min: r, phi_eps: phi };
            let a = sector_mass_about(region, &post, c).map_err(|e| e.to_string())?.value;
            let b = sector_mass_quadrature(region, &post, c).map_err(|e| e.to_string())?;
            d = d.max((a - b).abs());
        }
    }
    if d < 1e-9 {
        Ok(format!("max abs diff {d:.2e}"))
    } else {
        Err(format!("max abs diff {d:.2e} exceeds 1e-9"))
    }
}

fn posterior_check() -> Result<String, String> {
    let prior = RicePrior::new(Complex64::new(1.0, 0.5), 0.8).unwrap();
    for n in [1, 3, 10] {
        for p in [0.1, 1.0, 100.0] {
            let tr = TrainingConfig::new(n, p, 1.0).unwrap();
            let post = posterior_params(Complex64::new(0.2, -0.1), &prior, &tr);
            if !(0.0..=1.0).contains(&post.delta) || post.variance > prior.variance {
                return Err(format!("N={n}, P={p}: delta {} variance {}", post.delta, post.variance));
            }
            let expect = post.delta * tr.error_var();
            if (post.variance - expect).abs() > 1e-12 * expect {
                return Err(format!("variance {} differs from delta * error variance {expect}", post.variance));
            }
        }
    }
    Ok("9 configurations".into())
}

fn composite_check() -> Result<String, String> {
    for post in sample_posts() {
        for p in [0.1, 1.0, 10.0, 1000.0] {
            let c = composite_capacity_post(&post, p, 1.0).map_err(|e| e.to_string())?;
            let l = composite_lower_bound_post(&post, p, 1.0).map_err(|e| e.to_string())?;
            if c < l {
                return Err(format!("composite {c} below lower bound {l}"));
            }
        }
    }
    Ok("16 cases".into())
}

fn ml_check() -> Result<String, String> {
    let prior = RicePrior::new(Complex64::new(1.0, 0.0), 1.0).unwrap();
    let tr = TrainingConfig::new(3, 10.0, 1.0).unwrap();
    let mut n = 0;
    for h in [Complex64::new(1.1, 0.3), Complex64::new(0.7, -0.6)] {
        let post = posterior_params(h, &prior, &tr);
        let ml = eio_ml_capacity_post(0.05, &post, h.arg(), 10.0, 1.0, &MlConfig::fast()).map_err(|e| e.to_string())?;
        let eio = eio_capacity_point(0.05, h, 10.0, 1.0, &prior, &tr).map_err(|e| e.to_string())?;
        if ml.rate > eio + 1e-9 {
            return Err(format!("ML rate {} above EIO {eio}", ml.rate));
        }
        n += 1;
    }
    Ok(format!("{n} estimates"))
}

fn outage_check() -> Result<String, String> {
    let prior = RicePrior::new(Complex64::new(1.0, 0.0), 1.0).unwrap();
    let tr = TrainingConfig::new(1, 3.0, 1.0).unwrap();
    let draws = 200_000;
    let mut worst_z = 0.0f64;
    for (k, g) in [0.01, 0.1].into_iter().enumerate() {
        let o = empirical_outage_stats(g, Complex64::new(0.8, 0.4), 3.0, &prior, &tr, draws, 7 + k as u64)
            .map_err(|e| e.to_string())?;
        let sd = (g * (1.0 - g) / draws as f64).sqrt();
        worst_z = worst_z.max((o.fraction - g).abs() / sd);
    }
    if worst_z < 4.0 {
        Ok(format!("worst deviation {worst_z:.2} sigma"))
    } else {
        Err(format!("deviation {worst_z:.2} sigma from gamma"))
    }
}

fn dmc_check() -> Result<String, String> {
    let scn = DiscreteScenario::from_json(TWO_BSC).map_err(|e| e.to_string())?;
    let a = eio_capacity_discrete(&scn).map_err(|e| e.to_string())?;
    let b = eio_capacity_discrete(&scn.with_gamma(0.0).unwrap()).map_err(|e| e.to_string())?;
    // 1 - h(0.05) and 1 - h(0.4)
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let (ea, eb) = (1.0 - h(0.05), 1.0 - h(0.4));
    if (a.rate - ea).abs() > 1e-6 || (b.rate - eb).abs() > 1e-6 {
        return Err(format!("rates {} and {} vs {ea} and {eb}", a.rate, b.rate));
    }
    for r in [&a, &b] {
        if let Some(g) = r.grid_rate {
            if (g - r.rate).abs() > 1e-3 {
                return Err(format!("grid cross-check {g} vs {}", r.rate));
            }
        }
    }
    Ok(format!("{:.4} and {:.4} bits", a.rate, b.rate))
}

fn waterfill_check() -> Result<String, String> {
    let r = [0.0, 0.2, 0.5, 1.0, 1.7, 3.0];
    let w = [0.1, 0.1, 0.2, 0.3, 0.2, 0.1];
    for mode in [WaterfillMode::Paper, WaterfillMode::Kkt] {
        for b in [0.05, 1.0, 50.0] {
            let pol = waterfill_levels(&r, &w, b, 1.0, mode).map_err(|e| e.to_string())?;
            let spent = pol.expected_power(&w);
            if (spent - b).abs() > 1e-6 * b {
                return Err(format!("{mode}: spent {spent} of {b}"));
            }
        }
    }
    Ok("6 allocations".into())
}

fn lloyd_check() -> Result<String, String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let s: Vec<Complex64> = (0..3200).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let (book, trace) = lloyd_max_design_traced(&s, 2, 5).map_err(|e| e.to_string())?;
    if trace.distortion.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12)) {
        return Err("distortion increased".into());
    }
    Ok(format!("{} iterations, distortion {:.4}", trace.distortion.len(), book.distortion))
}
