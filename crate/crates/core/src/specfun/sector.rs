//! Posterior probability of an annular sector `{|h| >= r, |arg h - c| <= phi}`.
//!
//! The primary route expands `exp(a rho cos psi)` in Bessel harmonics, which
//! turns the angular integral into a Nuttall-weighted Fourier series:
//!
//! `M = (1/pi) [phi Q_{1,0}(a,b) + 2 sum_k Q_{1,k}(a,b) cos(k d) sin(k phi) / k]`
//!
//! with `a = |m| sqrt(2/v)`, `b = r sqrt(2/v)` and `d` the offset between the
//! sector centre and the phase of the posterior mean. When the harmonics decay
//! too slowly (very concentrated posteriors) the mass is computed instead as a
//! one-dimensional angular integral whose radial part is closed form.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::marcum::nuttall_q_orders;
use super::quad::{integrate_vec, integrate_with_breaks, QuadConfig};
use crate::error::{Error, Result};
use crate::rician::PosteriorParams;

/// Series terms are dropped once their bound `2 Q_k / (pi k)` falls below this.
pub const TERM_CUTOFF: f64 = 1e-12;
/// Largest number of harmonics tried before falling back to quadrature.
pub const MAX_TERMS: u32 = 200;
const TERM_SCHEDULE: [u32; 4] = [32, 64, 128, MAX_TERMS];

/// Sector `{ |h| >= r_min, |arg h - centre| <= phi_eps }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorRegion {
    pub r_min: f64,
    pub phi_eps: f64,
}

impl SectorRegion {
    pub fn new(r_min: f64, phi_eps: f64) -> Result<Self> {
        let region = Self { r_min, phi_eps };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min >= 0.0) || !self.r_min.is_finite() {
            return Err(Error::domain(
                "SectorRegion",
                format!("r_min must be finite and >= 0, got {}", self.r_min),
            ));
        }
        if !(0.0..=PI).contains(&self.phi_eps) {
            return Err(Error::domain(
                "SectorRegion",
                format!("phi_eps must lie in [0, pi], got {}", self.phi_eps),
            ));
        }
        Ok(())
    }
}

/// How a sector mass was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorMethod {
    /// Harmonic series truncated after `terms` Nuttall orders.
    Series { terms: u32 },
    /// Angular quadrature fallback.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorMass {
    pub value: f64,
    pub method: SectorMethod,
}

impl SectorMass {
    pub fn used_fallback(&self) -> bool {
        self.method == SectorMethod::Quadrature
    }
}

/// Mass of the sector centred on the phase of the posterior mean.
pub fn sector_mass(region: SectorRegion, post: &PosteriorParams) -> Result<f64> {
    Ok(sector_mass_about(region, post, post.mean.arg())?.value)
}

/// Mass of the sector centred on the absolute phase `centre`.
pub fn sector_mass_about(
    region: SectorRegion,
    post: &PosteriorParams,
    centre: f64,
) -> Result<SectorMass> {
    region.validate()?;
    let offset = reduce_offset(centre - post.mean.arg());
    if region.phi_eps == 0.0 {
        return Ok(SectorMass {
            value: 0.0,
            method: SectorMethod::Series { terms: 0 },
        });
    }
    let (a, b) = marcum_args(region.r_min, post);
    if let Some(mass) = series(a, b, region.phi_eps, offset)? {
        return Ok(mass);
    }
    let value = quadrature(region, post, offset)?;
    Ok(SectorMass {
        value,
        method: SectorMethod::Quadrature,
    })
}

/// The same mass by direct angular quadrature (no series).
pub fn sector_mass_quadrature(
    region: SectorRegion,
    post: &PosteriorParams,
    centre: f64,
) -> Result<f64> {
    region.validate()?;
    quadrature(region, post, reduce_offset(centre - post.mean.arg()))
}

/// Two-harmonic truncation of the series. Only accurate while the posterior
/// is weakly concentrated (small `|m|^2 / v`); kept for comparison.
pub fn sector_mass_two_term(
    region: SectorRegion,
    post: &PosteriorParams,
    centre: f64,
) -> Result<f64> {
    region.validate()?;
    let offset = reduce_offset(centre - post.mean.arg());
    let (a, b) = marcum_args(region.r_min, post);
    let q = nuttall_q_orders(1, a, b)?;
    let phi = region.phi_eps;
    Ok((phi * q[0] + 2.0 * q[1] * offset.cos() * phi.sin()) / PI)
}

fn marcum_args(r: f64, post: &PosteriorParams) -> (f64, f64) {
    let s = (2.0 / post.variance).sqrt();
    (post.mean.norm() * s, r * s)
}

/// Maps a phase difference into `[0, pi]`; the mass is even in the offset.
fn reduce_offset(d: f64) -> f64 {
    let r = d.rem_euclid(TAU);
    if r > PI {
        TAU - r
    } else {
        r
    }
}

fn series(a: f64, b: f64, phi: f64, offset: f64) -> Result<Option<SectorMass>> {
    for &k_max in &TERM_SCHEDULE {
        let q = nuttall_q_orders(k_max, a, b)?;
        let Some(stop) = (1..=k_max as usize).find(|&k| 2.0 * q[k] / (PI * k as f64) < TERM_CUTOFF)
        else {
            continue;
        };
        let mut sum = phi * q[0];
        for (k, qk) in q.iter().enumerate().take(stop).skip(1) {
            let kf = k as f64;
            sum += 2.0 * qk * (kf * offset).cos() * (kf * phi).sin() / kf;
        }
        return Ok(Some(SectorMass {
            value: (sum / PI).clamp(0.0, 1.0),
            method: SectorMethod::Series {
                terms: stop as u32,
            },
        }));
    }
    Ok(None)
}

fn quad_cfg() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// Breakpoints that resolve the angular peak at `psi = 0` (and `2 pi`), whose
/// width is about `1 / m`.
fn breakpoints(lo: f64, hi: f64, m: f64) -> Vec<f64> {
    let w = if m > 1.0 { 1.0 / m } else { 1.0 };
    let mut pts = vec![lo, hi];
    for c in [0.0, TAU] {
        for j in [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
            let p = c + j * w;
            if p > lo && p < hi {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Radial integral of the normalised density beyond `r` along angle `psi`
/// measured from the posterior mean (all lengths in units of `sqrt(v)`).
fn radial(psi: f64, m: f64, r: f64) -> f64 {
    let mc = m * psi.cos();
    let ms = m * psi.sin();
    let u = r - mc;
    let inner = 0.5 * (-u * u).exp() + mc * 0.5 * PI.sqrt() * libm::erfc(u);
    (-ms * ms).exp() * inner / PI
}

fn quadrature(region: SectorRegion, post: &PosteriorParams, offset: f64) -> Result<f64> {
    let sd = post.variance.sqrt();
    let m = post.mean.norm() / sd;
    let r = region.r_min / sd;
    let lo = offset - region.phi_eps;
    let hi = offset + region.phi_eps;
    let mut f = |psi: f64| radial(psi, m, r);
    let res = integrate_with_breaks(&mut f, &breakpoints(lo, hi, m), quad_cfg());
    if !res.converged {
        return Err(Error::numeric(
            "sector_mass",
            format!(
                "angular quadrature did not converge (r={}, phi={}, |m|/sd={m}): error {:e}",
                region.r_min, region.phi_eps, res.error
            ),
        ));
    }
    Ok(res.value.clamp(0.0, 1.0))
}

/// Sector mass and its derivative with respect to `r_min`, both by angular
/// quadrature with one shared set of nodes. Used by root finders.
pub(crate) fn sector_mass_with_slope(
    region: SectorRegion,
    post: &PosteriorParams,
    offset: f64,
    cfg: QuadConfig,
) -> Result<(f64, f64)> {
    let sd = post.variance.sqrt();
    let m = post.mean.norm() / sd;
    let r = region.r_min / sd;
    let offset = reduce_offset(offset);
    let lo = offset - region.phi_eps;
    let hi = offset + region.phi_eps;
    if hi <= lo {
        return Ok((0.0, 0.0));
    }
    let pts = breakpoints(lo, hi, m);
    let mut mass = 0.0;
    let mut slope = 0.0;
    for w in pts.windows(2) {
        let res = integrate_vec(
            |psi, out| {
                let mc = m * psi.cos();
                let ms = m * psi.sin();
                let u = r - mc;
                let g = (-u * u - ms * ms).exp();
                out[0] = ((-ms * ms).exp() * 0.5 * (-u * u).exp()
                    + (-ms * ms).exp() * mc * 0.5 * PI.sqrt() * libm::erfc(u))
                    / PI;
                out[1] = -r * g / PI;
            },
            2,
            w[0],
            w[1],
            cfg,
        );
        if !res.converged {
            return Err(Error::numeric(
                "sector_mass_with_slope",
                format!("angular quadrature did not converge: error {:e}", res.error),
            ));
        }
        mass += res.values[0];
        slope += res.values[1];
    }
    Ok((mass.clamp(0.0, 1.0), slope / sd))
}
