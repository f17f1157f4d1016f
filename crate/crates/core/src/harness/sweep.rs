//! SNR sweeps of the mean rate curves for the Ricean example.
//!
//! Normalisation: `mu_H = 1`, `sigma_H^2 = 1 / K_H`, unit receiver noise,
//! average power `P = 10^(snr/10)` and pilots sent at the same power, so the
//! estimation error variance `1 / (N P)` shrinks along the SNR axis.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{
    codebook_size, design_feedback_codebook, draw_estimates, mean_eio_quantized,
    mean_ergodic_capacity, mean_rate_with_allocation, worst_case_gains, MeanEstimate,
    WaterfillMode,
};
use crate::feedback::quantizer::JOINT_MAX_BITS;
use crate::rician::{
    composite_capacity_post, eio_ml_capacity_post, mean_perfect_csi_capacity, percentile,
    posterior_params, MlConfig, PosteriorParams, RicePrior, TrainingConfig,
};

pub const CSV_HEADER: &str = "snr_db,gamma,N,K_H_db,R_FB,curve,rate_bits,std_err";
pub const MIN_DRAWS: usize = 1000;
/// Environment variable capping the worker threads of a sweep.
pub const THREADS_ENV: &str = "EIO_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    /// `E[log2(1 + |H|^2 P)]`, fixed power.
    PerfectCsi,
    /// Perfect CSI at both ends with water-filling.
    ErgodicCsi,
    /// Mean capacity of the composite channel given the estimate.
    Composite,
    /// Mean EIO capacity, perfect feedback, fixed power.
    Eio,
    /// Mean EIO capacity, perfect feedback, water-filling.
    EioPowerAlloc,
    /// Outage capacity under the prior; the transmitter ignores the estimate.
    EioNoCsit,
    /// Mean EIO rate of the mismatched nearest-neighbour decoder.
    EioMl,
    /// Mean EIO capacity with a quantized estimate and water-filling.
    EioQuantized,
}

impl Curve {
    pub const ALL: [Curve; 8] = [
        Curve::PerfectCsi,
        Curve::ErgodicCsi,
        Curve::Composite,
        Curve::Eio,
        Curve::EioPowerAlloc,
        Curve::EioNoCsit,
        Curve::EioMl,
        Curve::EioQuantized,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Curve::PerfectCsi => "perfect_csi",
            Curve::ErgodicCsi => "ergodic_csi",
            Curve::Composite => "composite",
            Curve::Eio => "eio",
            Curve::EioPowerAlloc => "eio_power_alloc",
            Curve::EioNoCsit => "eio_no_csit",
            Curve::EioMl => "eio_ml",
            Curve::EioQuantized => "eio_quantized",
        }
    }

    fn uses_gamma(self) -> bool {
        !matches!(self, Curve::PerfectCsi | Curve::ErgodicCsi | Curve::Composite)
    }

    fn uses_pilots(self) -> bool {
        !matches!(self, Curve::PerfectCsi | Curve::ErgodicCsi | Curve::EioNoCsit)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Curve {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Curve::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::invalid("curve", format!("unknown curve {s:?}")))
    }
}

fn default_draws() -> usize {
    10_000
}
fn default_ml_draws() -> usize {
    2_000
}
fn default_quantizer_draws() -> usize {
    20_000
}
fn default_holdout() -> usize {
    1_000_000
}
fn default_ml_grid() -> usize {
    MlConfig::fast().grid_points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub id: String,
    pub snr_db: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n_pilots: Vec<u32>,
    pub rice_db: Vec<f64>,
    #[serde(default)]
    pub feedback_bits: Vec<u32>,
    pub curves: Vec<Curve>,
    /// Estimate draws per grid point.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Leading subset of the estimate draws used for the mismatched decoder.
    #[serde(default = "default_ml_draws")]
    pub ml_draws: usize,
    #[serde(default = "default_ml_grid")]
    pub ml_grid_points: usize,
    /// Design-set size per codebook (raised to 100 samples per cell).
    #[serde(default = "default_quantizer_draws")]
    pub quantizer_draws: usize,
    /// Held-out draws for the codebook cell probabilities.
    #[serde(default = "default_holdout")]
    pub holdout_draws: usize,
    #[serde(default)]
    pub mode: WaterfillMode,
    #[serde(default)]
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::invalid(name, "must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("snr_db", self.snr_db.len())?;
        nonempty("n_pilots", self.n_pilots.len())?;
        nonempty("rice_db", self.rice_db.len())?;
        nonempty("curves", self.curves.len())?;
        if self.curves.iter().any(|c| c.uses_gamma()) {
            nonempty("gamma", self.gamma.len())?;
        }
        if self.curves.contains(&Curve::EioQuantized) {
            nonempty("feedback_bits", self.feedback_bits.len())?;
        }
        for (i, s) in self.snr_db.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::invalid(format!("snr_db[{i}]"), "must be finite"));
            }
        }
        for (i, k) in self.rice_db.iter().enumerate() {
            if !k.is_finite() {
                return Err(Error::invalid(format!("rice_db[{i}]"), "must be finite"));
            }
        }
        for (i, g) in self.gamma.iter().enumerate() {
            if !(0.0..1.0).contains(g) {
                return Err(Error::invalid(format!("gamma[{i}]"), "must lie in [0, 1)"));
            }
        }
        if let Some(i) = self.n_pilots.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!("n_pilots[{i}]"), "must be positive"));
        }
        if let Some(i) = self
            .feedback_bits
            .iter()
            .position(|&r| r > crate::feedback::quantizer::MAX_RATE_BITS)
        {
            return Err(Error::invalid(format!("feedback_bits[{i}]"), "too large"));
        }
        for (name, v) in [
            ("draws", self.draws),
            ("ml_draws", self.ml_draws),
            ("holdout_draws", self.holdout_draws),
        ] {
            if v < MIN_DRAWS {
                return Err(Error::invalid(name, format!("must be at least {MIN_DRAWS}, got {v}")));
            }
        }
        if self.ml_grid_points < 2 {
            return Err(Error::invalid("ml_grid_points", "must be at least 2"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub gamma: Option<f64>,
    pub n_pilots: Option<u32>,
    pub rice_db: f64,
    pub feedback_bits: Option<u32>,
    pub curve: Curve,
    /// NaN when the point failed; see `error`.
    pub rate_bits: f64,
    pub std_err: f64,
    pub error: Option<String>,
}

/// Channel prior and pilot training for one grid point.
pub fn grid_model(snr_db: f64, n_pilots: u32, rice_db: f64) -> Result<(RicePrior, TrainingConfig, f64)> {
    let power = 10f64.powf(snr_db / 10.0);
    let prior = RicePrior::from_rice_factor(1.0, 10f64.powf(rice_db / 10.0))?;
    let training = TrainingConfig::new(n_pilots, power, 1.0)?;
    Ok((prior, training, power))
}

struct Point {
    index: usize,
    snr_db: f64,
    n_pilots: u32,
    first_pilot: bool,
    rice_db: f64,
}

/// Evaluates every requested curve on the grid. Grid points run in
/// parallel; rows come back in grid order (Rice factor, pilots, SNR).
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut points = Vec::new();
    for &rice_db in &spec.rice_db {
        for (j, &n_pilots) in spec.n_pilots.iter().enumerate() {
            for &snr_db in &spec.snr_db {
                points.push(Point {
                    index: points.len(),
                    snr_db,
                    n_pilots,
                    first_pilot: j == 0,
                    rice_db,
                });
            }
        }
    }
    let rows = with_thread_cap(|| {
        points
            .par_iter()
            .map(|p| eval_point(spec, p))
            .collect::<Vec<_>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Runs `f` on a pool limited by `EIO_LAB_THREADS`, if set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::invalid(THREADS_ENV, format!("expected a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn eval_point(spec: &SweepSpec, p: &Point) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    let row = |curve: Curve, gamma: Option<f64>, rfb: Option<u32>, res: Result<MeanEstimate>| {
        let (rate_bits, std_err, error) = match res {
            Ok(m) => (m.mean, m.std_err, None),
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };
        SweepRow {
            snr_db: p.snr_db,
            gamma,
            n_pilots: curve.uses_pilots().then_some(p.n_pilots),
            rice_db: p.rice_db,
            feedback_bits: rfb,
            curve,
            rate_bits,
            std_err,
            error,
        }
    };
    let (prior, training, power) = match grid_model(p.snr_db, p.n_pilots, p.rice_db) {
        Ok(m) => m,
        Err(e) => {
            let msg = e.to_string();
            return spec
                .curves
                .iter()
                .map(|&c| row(c, None, None, Err(Error::Argument(msg.clone()))))
                .collect();
        }
    };
    let noise = training.noise_var;
    // independent child seeds so each curve's draws do not depend on the others
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(p.index as u64);
    let (seed_est, seed_erg, seed_q) = (rng.next_u64(), rng.next_u64(), rng.next_u64());
    let estimates = draw_estimates(&prior, &training, spec.draws, &mut ChaCha8Rng::seed_from_u64(seed_est));
    let posts: Vec<PosteriorParams> = estimates
        .iter()
        .map(|&h| posterior_params(h, &prior, &training))
        .collect();
    let mut gains: HashMap<u64, Result<Vec<f64>>> = HashMap::new();
    let mut gains_for = |g: f64| -> Result<Vec<f64>> {
        gains
            .entry(g.to_bits())
            .or_insert_with(|| worst_case_gains(g, &estimates, &prior, &training))
            .as_ref()
            .map(Clone::clone)
            .map_err(|e| Error::Argument(e.to_string()))
    };

    for &curve in &spec.curves {
        match curve {
            Curve::PerfectCsi if p.first_pilot => {
                let r = mean_perfect_csi_capacity(&prior, power, noise).map(MeanEstimate::exact);
                rows.push(row(curve, None, None, r));
            }
            Curve::ErgodicCsi if p.first_pilot => {
                let r = mean_ergodic_capacity(&prior, power, noise, spec.draws, seed_erg);
                rows.push(row(curve, None, None, r));
            }
            Curve::EioNoCsit if p.first_pilot => {
                for &g in &spec.gamma {
                    let r = percentile(g, &PosteriorParams::from_prior(&prior))
                        .map(|r| MeanEstimate::exact((r * r * power / noise).ln_1p() / std::f64::consts::LN_2));
                    rows.push(row(curve, Some(g), None, r));
                }
            }
            Curve::PerfectCsi | Curve::ErgodicCsi | Curve::EioNoCsit => {}
            Curve::Composite => {
                let r: Result<Vec<f64>> = posts
                    .par_iter()
                    .map(|post| composite_capacity_post(post, power, noise))
                    .collect();
                rows.push(row(curve, None, None, r.map(|v| MeanEstimate::from_samples(&v))));
            }
            Curve::Eio | Curve::EioPowerAlloc => {
                let mode = if curve == Curve::Eio { WaterfillMode::Fixed } else { spec.mode };
                for &g in &spec.gamma {
                    let r = gains_for(g)
                        .and_then(|r| mean_rate_with_allocation(&r, power, noise, mode).map(|x| x.0));
                    rows.push(row(curve, Some(g), None, r));
                }
            }
            Curve::EioMl => {
                let cfg = MlConfig {
                    grid_points: spec.ml_grid_points,
                    refine: true,
                    verify: false,
                };
                let n = spec.ml_draws.min(estimates.len());
                for &g in &spec.gamma {
                    let r: Result<Vec<f64>> = (0..n)
                        .into_par_iter()
                        .map(|k| {
                            match eio_ml_capacity_post(g, &posts[k], estimates[k].arg(), power, noise, &cfg) {
                                Ok(m) => Ok(m.rate),
                                // no admissible sector: the decoder cannot promise any rate
                                Err(Error::Infeasible(_)) => Ok(0.0),
                                Err(e) => Err(e),
                            }
                        })
                        .collect();
                    rows.push(row(curve, Some(g), None, r.map(|v| MeanEstimate::from_samples(&v))));
                }
            }
            Curve::EioQuantized => {
                for &bits in &spec.feedback_bits {
                    let per_cell = if bits <= JOINT_MAX_BITS { codebook_size(bits) } else { 1 << bits };
                    let design = spec.quantizer_draws.max(100 * per_cell);
                    let book = design_feedback_codebook(
                        &prior,
                        &training,
                        bits,
                        design,
                        spec.holdout_draws,
                        seed_q.wrapping_add(bits as u64),
                    );
                    for &g in &spec.gamma {
                        let r = book
                            .as_ref()
                            .map_err(|e| Error::Argument(e.to_string()))
                            .and_then(|b| mean_eio_quantized(g, b, power, spec.mode, &prior, &training));
                        rows.push(row(curve, Some(g), Some(bits), r));
                    }
                }
            }
        }
    }
    rows
}

fn opt<T: fmt::Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows as CSV with full-precision numbers.
pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.snr_db,
            opt(r.gamma),
            opt(r.n_pilots),
            r.rice_db,
            opt(r.feedback_bits),
            r.curve,
            r.rate_bits,
            r.std_err
        )?;
    }
    Ok(())
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses CSV written by [`write_csv`].
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::invalid("csv", format!("expected header {CSV_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let at = format!("csv line {}", i + 2);
        if f.len() != 8 {
            return Err(Error::invalid(at, format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::invalid(at.clone(), format!("bad number {s:?}")))
        };
        let opt_num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        rows.push(SweepRow {
            snr_db: num(f[0])?,
            gamma: opt_num(f[1])?,
            n_pilots: opt_num(f[2])?.map(|x| x as u32),
            rice_db: num(f[3])?,
            feedback_bits: opt_num(f[4])?.map(|x| x as u32),
            curve: f[5].parse()?,
            rate_bits: num(f[6])?,
            std_err: num(f[7])?,
            error: None,
        });
    }
    Ok(rows)
}

/// Selects one curve out of a sweep; unset fields match anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveKey {
    pub curve: Curve,
    pub gamma: Option<f64>,
    pub n_pilots: Option<u32>,
    pub rice_db: Option<f64>,
    pub feedback_bits: Option<u32>,
}

impl CurveKey {
    pub fn new(curve: Curve) -> Self {
        Self {
            curve,
            gamma: None,
            n_pilots: None,
            rice_db: None,
            feedback_bits: None,
        }
    }

    pub fn gamma(mut self, g: f64) -> Self {
        self.gamma = Some(g);
        self
    }

    pub fn pilots(mut self, n: u32) -> Self {
        self.n_pilots = Some(n);
        self
    }

    pub fn rice_db(mut self, k: f64) -> Self {
        self.rice_db = Some(k);
        self
    }

    pub fn feedback_bits(mut self, r: u32) -> Self {
        self.feedback_bits = Some(r);
        self
    }

    pub fn matches(&self, row: &SweepRow) -> bool {
        row.curve == self.curve
            && self.gamma.is_none_or(|g| row.gamma == Some(g))
            && self.n_pilots.is_none_or(|n| row.n_pilots == Some(n))
            && self.rice_db.is_none_or(|k| row.rice_db == k)
            && self.feedback_bits.is_none_or(|r| row.feedback_bits == Some(r))
    }

    /// `(snr_db, rate_bits)` sorted by SNR.
    pub fn series(&self, rows: &[SweepRow]) -> Result<Vec<(f64, f64)>> {
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| self.matches(r) && r.rate_bits.is_finite())
            .map(|r| (r.snr_db, r.rate_bits))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Argument(format!(
                "curve key {self:?} matches several rows at one SNR; narrow it"
            )));
        }
        Ok(pts)
    }
}

/// SNR at which a curve reaches `target` bits, by linear interpolation.
pub fn snr_at_rate(rows: &[SweepRow], key: &CurveKey, target: f64) -> Result<f64> {
    let pts = key.series(rows)?;
    for w in pts.windows(2) {
        let ((s0, r0), (s1, r1)) = (w[0], w[1]);
        if (r0 - target) * (r1 - target) <= 0.0 && r0 != r1 {
            return Ok(s0 + (target - r0) * (s1 - s0) / (r1 - r0));
        }
        if r0 == target {
            return Ok(s0);
        }
    }
    if let Some(&(s, r)) = pts.last() {
        if r == target {
            return Ok(s);
        }
    }
    Err(Error::Extrapolation(format!(
        "{} never crosses {target} bits on the grid",
        key.curve
    )))
}

/// `snr_b - snr_a` at the rate `target`, in dB.
pub fn gap_at_rate(rows: &[SweepRow], a: &CurveKey, b: &CurveKey, target: f64) -> Result<f64> {
    Ok(snr_at_rate(rows, b, target)? - snr_at_rate(rows, a, target)?)
}
