//! EIO rates of the nearest-neighbour decoder that trusts the estimate.
//!
//! For a sector `{|h| >= r, |arg h - arg h_hat| <= phi}` the least favourable
//! channel sits on the corner `(r, phi)`, where the decoder sees a useful
//! gain `r cos phi` and self-interference `r sin phi`. The achievable rate is
//! the best corner on the level set `Pr(sector) = 1 - gamma`.

use std::f64::consts::{FRAC_PI_2, LN_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{posterior_params, PosteriorParams, RicePrior, TrainingConfig};
use crate::error::{Error, Result};
use crate::specfun::quad::QuadConfig;
use crate::specfun::sector::{sector_mass_about, sector_mass_with_slope};
use crate::specfun::SectorRegion;

/// Worst-case rate over a sector: `log2(1 + r^2 cos^2 phi P / (r^2 sin^2 phi P + s2))`.
/// Sectors at least a quarter-turn wide contain a channel orthogonal to the
/// estimate, so their rate is zero.
pub fn ml_worst_case_rate(region: SectorRegion, power: f64, noise_var: f64) -> Result<f64> {
    region.validate()?;
    if !(power >= 0.0) || !(noise_var > 0.0) {
        return Err(Error::domain(
            "ml_worst_case_rate",
            format!("need power >= 0 and noise variance > 0, got {power}, {noise_var}"),
        ));
    }
    if region.phi_eps >= FRAC_PI_2 {
        return Ok(0.0);
    }
    let g = region.r_min * region.r_min * power;
    let (s, c) = region.phi_eps.sin_cos();
    Ok((g * c * c / (g * s * s + noise_var)).ln_1p() / LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlConfig {
    /// Number of half-angles on the grid, log-spaced between the narrowest
    /// feasible half-angle and `pi/2`.
    pub grid_points: usize,
    /// Golden-section refinement around the best grid cell.
    pub refine: bool,
    /// Re-evaluate the chosen sector's mass by the series route.
    pub verify: bool,
}

impl Default for MlConfig {
    fn default() -> Self {
        Self {
            grid_points: 512,
            refine: true,
            verify: true,
        }
    }
}

impl MlConfig {
    /// Coarser setting for Monte Carlo sweeps.
    pub fn fast() -> Self {
        Self {
            grid_points: 24,
            refine: true,
            verify: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlPoint {
    /// Best corner rate on the level set.
    pub rate: f64,
    pub region: SectorRegion,
    /// Smallest corner rate on the level set, for the literal `min` reading.
    pub min_rate: f64,
    /// Grid half-angles with a solution on the level set.
    pub feasible_angles: usize,
    /// Mass of the returned sector by the series route, when verified.
    pub verified_mass: Option<f64>,
}

fn slope_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2000,
    }
}

/// Radius `r` with `Pr(|h| >= r, |arg h - centre| <= phi) = target`, if the
/// full wedge has enough mass.
fn level_radius(
    post: &PosteriorParams,
    offset: f64,
    phi: f64,
    target: f64,
    guess: Option<f64>,
) -> Result<Option<f64>> {
    let mass = |r: f64| {
        sector_mass_with_slope(SectorRegion { r_min: r, phi_eps: phi }, post, offset, slope_cfg())
    };
    let (m0, _) = mass(0.0)?;
    if m0 < target {
        return Ok(None);
    }
    let sd = post.variance.sqrt();
    let (mut lo, mut hi) = (0.0, post.mean.norm() + 10.0 * sd);
    let mut r = guess.unwrap_or(0.5 * (lo + hi)).clamp(lo, hi);
    for _ in 0..200 {
        let (m, d) = mass(r)?;
        let f = m - target;
        if f > 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        let mut next = if d < 0.0 { r - f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - r).abs();
        r = next;
        if step < 1e-10 || hi - lo < 1e-10 {
            break;
        }
    }
    Ok(Some(r))
}

/// Best and worst corner rates on the level set for the posterior `post`,
/// with sectors centred on the phase `centre` of the estimate.
pub fn eio_ml_capacity_post(
    gamma: f64,
    post: &PosteriorParams,
    centre: f64,
    power: f64,
    noise_var: f64,
    cfg: &MlConfig,
) -> Result<MlPoint> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(
            "eio_ml_capacity_point",
            format!("gamma must lie in (0, 1), got {gamma}"),
        ));
    }
    let target = 1.0 - gamma;
    let offset = centre - post.mean.arg();
    let wedge = |phi: f64| -> Result<f64> {
        Ok(sector_mass_with_slope(SectorRegion { r_min: 0.0, phi_eps: phi }, post, offset, slope_cfg())?.0)
    };
    if wedge(FRAC_PI_2)? < target {
        return Err(Error::Infeasible(format!(
            "no sector within a quarter-turn of the estimate holds mass {target}"
        )));
    }
    // narrowest feasible half-angle; the grid is log-spaced above it
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if wedge(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let phi_min = hi;
    let n = cfg.grid_points.max(2);
    let ratio = (FRAC_PI_2 / phi_min).ln();
    let mut grid = Vec::with_capacity(n);
    let mut guess = None;
    // sweep from wide to narrow so the radius guesses move monotonically
    for i in (1..=n).rev() {
        let phi = phi_min * (ratio * i as f64 / n as f64).exp();
        if let Some(r) = level_radius(post, offset, phi, target, guess)? {
            guess = Some(r);
            let rate = ml_worst_case_rate(SectorRegion { r_min: r, phi_eps: phi }, power, noise_var)?;
            grid.push((phi, r, rate));
        }
    }
    if grid.is_empty() {
        return Err(Error::Infeasible(format!(
            "no sector within a quarter-turn of the estimate holds mass {target}"
        )));
    }
    let feasible = grid.len();
    let min_rate = grid.iter().map(|g| g.2).fold(f64::INFINITY, f64::min);
    let best = grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .2.total_cmp(&b.1 .2))
        .map(|(k, _)| k)
        .expect("non-empty grid");
    let (mut phi, mut r, mut rate) = grid[best];

    if cfg.refine {
        // grid runs from wide (index 0) to narrow
        let lo_phi = grid.get(best + 1).map_or(phi_min, |g| g.0);
        let hi_phi = if best == 0 { FRAC_PI_2 } else { grid[best - 1].0 };
        let eval = |p: f64, g: f64| -> Result<Option<(f64, f64)>> {
            Ok(level_radius(post, offset, p, target, Some(g))?.map(|rr| {
                let v = ml_worst_case_rate(SectorRegion { r_min: rr, phi_eps: p }, power, noise_var)
                    .unwrap_or(0.0);
                (rr, v)
            }))
        };
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo_phi, hi_phi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c, r)?;
        let mut fd = eval(d, r)?;
        for _ in 0..40 {
            let vc = fc.map_or(f64::NEG_INFINITY, |x| x.1);
            let vd = fd.map_or(f64::NEG_INFINITY, |x| x.1);
            if vc >= vd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c, r)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d, r)?;
            }
            // the rate is flat at its maximum, so phi need not be tighter
            if b - a < 1e-7 {
                break;
            }
        }
        for (p, f) in [(c, fc), (d, fd)] {
            if let Some((rr, v)) = f {
                if v > rate {
                    phi = p;
                    r = rr;
                    rate = v;
                }
            }
        }
    }
    let region = SectorRegion { r_min: r, phi_eps: phi };
    let verified_mass = if cfg.verify {
        Some(sector_mass_about(region, post, centre)?.value)
    } else {
        None
    };
    Ok(MlPoint {
        rate,
        region,
        min_rate,
        feasible_angles: feasible,
        verified_mass,
    })
}

/// Mismatched-decoder EIO rate for one estimate, sectors centred on its phase.
pub fn eio_ml_capacity_point(
    gamma: f64,
    estimate: Complex64,
    power: f64,
    prior: &RicePrior,
    training: &TrainingConfig,
) -> Result<MlPoint> {
    let post = posterior_params(estimate, prior, training);
    eio_ml_capacity_post(
        gamma,
        &post,
        estimate.arg(),
        power,
        training.noise_var,
        &MlConfig::default(),
    )
}
