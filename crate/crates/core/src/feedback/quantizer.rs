//! Lloyd-Max codebooks for the complex channel estimate.
//!
//! Up to 4 bits per real dimension the codebook is a joint 2-D design of
//! `floor(2^(2R))` points. From 5 bits on it is the product of two scalar
//! Lloyd-Max quantizers with `2^R` levels each, which has the same number of
//! points and keeps both design and lookup cheap.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest rate designed jointly in the complex plane.
pub const JOINT_MAX_BITS: u32 = 4;
pub const LLOYD_REL_TOL: f64 = 1e-8;
pub const LLOYD_MAX_ITER: usize = 500;
/// Largest supported feedback rate.
pub const MAX_RATE_BITS: u32 = 12;

/// `floor(2^(2 rate_bits))`.
pub fn codebook_size(rate_bits: u32) -> usize {
    1usize << (2 * rate_bits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerCodebook {
    pub points: Vec<Complex64>,
    /// `Pr(Q[H_hat] = points[i])`.
    pub cell_probs: Vec<f64>,
    /// Mean squared quantization error on the design set.
    pub distortion: f64,
    pub rate_bits: u32,
    /// Number of draws behind `cell_probs`, 0 if unknown.
    pub prob_draws: u64,
    /// Per-dimension levels when the codebook is a product grid; point
    /// `i * n + j` is `re[i] + i im[j]`.
    grid: Option<(Vec<f64>, Vec<f64>)>,
}

/// Iteration record of a design run.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydTrace {
    /// Design distortion after each assignment step.
    pub distortion: Vec<f64>,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    points: Vec<[f64; 2]>,
    cell_probs: Vec<f64>,
    distortion: f64,
    rate_bits: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    prob_draws: u64,
}

fn is_zero(x: &u64) -> bool {
    *x == 0
}

impl QuantizerCodebook {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest codepoint; ties go to the lower index.
    pub fn quantize_index(&self, h: Complex64) -> usize {
        if let Some((re, im)) = &self.grid {
            return nearest_level(re, h.re) * im.len() + nearest_level(im, h.im);
        }
        nearest_point(&self.points, h).0
    }

    pub fn quantize(&self, h: Complex64) -> Complex64 {
        self.points[self.quantize_index(h)]
    }

    /// Index of `point` in the codebook, if it is one of the codepoints.
    pub fn position(&self, point: Complex64) -> Option<usize> {
        let i = self.quantize_index(point);
        (self.points[i] == point).then_some(i)
    }

    /// Replaces `cell_probs` with the empirical cell frequencies of `draws`.
    pub fn estimate_cell_probs(&mut self, draws: &[Complex64]) -> Result<()> {
        if draws.is_empty() {
            return Err(Error::invalid("draws", "need at least one held-out draw"));
        }
        let mut counts = vec![0u64; self.len()];
        for &h in draws {
            counts[self.quantize_index(h)] += 1;
        }
        let n = draws.len() as f64;
        self.cell_probs = counts.into_iter().map(|c| c as f64 / n).collect();
        self.prob_draws = draws.len() as u64;
        Ok(())
    }

    /// Mean squared error of the codebook on `samples`.
    pub fn mean_squared_error(&self, samples: &[Complex64]) -> f64 {
        let total: f64 = samples
            .iter()
            .map(|&h| (h - self.quantize(h)).norm_sqr())
            .sum();
        total / samples.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CodebookFile {
            points: self.points.iter().map(|p| [p.re, p.im]).collect(),
            cell_probs: self.cell_probs.clone(),
            distortion: self.distortion,
            rate_bits: self.rate_bits,
            prob_draws: self.prob_draws,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CodebookFile = serde_json::from_str(text)?;
        if f.points.is_empty() {
            return Err(Error::invalid("points", "codebook is empty"));
        }
        if f.cell_probs.len() != f.points.len() {
            return Err(Error::invalid(
                "cell_probs",
                format!("{} probabilities for {} points", f.cell_probs.len(), f.points.len()),
            ));
        }
        if let Some(i) = f.cell_probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(Error::invalid(format!("cell_probs[{i}]"), "must be >= 0"));
        }
        let total: f64 = f.cell_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("cell_probs", format!("sum to {total}, not 1")));
        }
        if !(f.distortion >= 0.0) {
            return Err(Error::invalid("distortion", "must be >= 0"));
        }
        let points: Vec<Complex64> = f.points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        let grid = detect_grid(&points);
        Ok(Self {
            points,
            cell_probs: f.cell_probs,
            distortion: f.distortion,
            rate_bits: f.rate_bits,
            prob_draws: f.prob_draws,
            grid,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Recovers the product structure of an imported codebook, if any.
fn detect_grid(points: &[Complex64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = (points.len() as f64).sqrt().round() as usize;
    if n < 2 || n * n != points.len() {
        return None;
    }
    let re: Vec<f64> = (0..n).map(|i| points[i * n].re).collect();
    let im: Vec<f64> = (0..n).map(|j| points[j].im).collect();
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
    if !sorted(&re) || !sorted(&im) {
        return None;
    }
    let exact = points
        .iter()
        .enumerate()
        .all(|(k, p)| p.re == re[k / n] && p.im == im[k % n]);
    exact.then_some((re, im))
}

fn nearest_point(points: &[Complex64], h: Complex64) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = (h - p).norm_sqr();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Nearest entry of an increasing list; ties go to the lower index.
fn nearest_level(levels: &[f64], x: f64) -> usize {
    let k = levels.partition_point(|&l| l < x);
    if k == 0 {
        return 0;
    }
    if k == levels.len() {
        return k - 1;
    }
    if x - levels[k - 1] <= levels[k] - x {
        k - 1
    } else {
        k
    }
}

/// Designs a codebook for `rate_bits` on the training set `samples`.
/// Cell probabilities are the design-set frequencies; refresh them on
/// held-out draws with [`QuantizerCodebook::estimate_cell_probs`].
pub fn lloyd_max_design(samples: &[Complex64], rate_bits: u32, seed: u64) -> Result<QuantizerCodebook> {
    lloyd_max_design_traced(samples, rate_bits, seed).map(|(c, _)| c)
}

pub fn lloyd_max_design_traced(
    samples: &[Complex64],
    rate_bits: u32,
    seed: u64,
) -> Result<(QuantizerCodebook, LloydTrace)> {
    if rate_bits > MAX_RATE_BITS {
        return Err(Error::invalid(
            "rate_bits",
            format!("at most {MAX_RATE_BITS} bits supported, got {rate_bits}"),
        ));
    }
    if let Some(i) = samples.iter().position(|h| !h.re.is_finite() || !h.im.is_finite()) {
        return Err(Error::invalid(format!("samples[{i}]"), "not finite"));
    }
    let m = codebook_size(rate_bits);
    let need = if rate_bits <= JOINT_MAX_BITS { 100 * m } else { 100 << rate_bits };
    if samples.len() < need {
        return Err(Error::invalid(
            "samples",
            format!("{} samples for {m} codepoints, need at least {need}", samples.len()),
        ));
    }
    let (mut book, trace) = if rate_bits <= JOINT_MAX_BITS {
        joint_design(samples, m, seed)?
    } else {
        product_design(samples, 1 << rate_bits)?
    };
    book.rate_bits = rate_bits;
    let mut counts = vec![0u64; book.len()];
    for &h in samples {
        counts[book.quantize_index(h)] += 1;
    }
    book.cell_probs = counts.iter().map(|&c| c as f64 / samples.len() as f64).collect();
    book.prob_draws = samples.len() as u64;
    Ok((book, trace))
}

fn check_monotone(prev: Option<f64>, d: f64) -> Result<()> {
    match prev {
        Some(p) if d > p * (1.0 + 1e-12) + 1e-300 => Err(Error::numeric(
            "lloyd_max_design",
            format!("distortion increased from {p:e} to {d:e}"),
        )),
        _ => Ok(()),
    }
}

fn converged(prev: Option<f64>, d: f64) -> bool {
    match prev {
        Some(p) => d == 0.0 || (p - d) <= LLOYD_REL_TOL * p,
        None => d == 0.0,
    }
}

/// k-means++ seeding with a seeded stream.
fn seed_points(samples: &[Complex64], m: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![samples[rng.random_range(0..samples.len())]];
    let mut dist: Vec<f64> = samples.iter().map(|h| (h - points[0]).norm_sqr()).collect();
    while points.len() < m {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut k = samples.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if u < d {
                    k = i;
                    break;
                }
                u -= d;
            }
            samples[k]
        } else {
            samples[0]
        };
        points.push(next);
        for (d, h) in dist.iter_mut().zip(samples) {
            *d = d.min((h - next).norm_sqr());
        }
    }
    points
}

fn joint_design(samples: &[Complex64], m: usize, seed: u64) -> Result<(QuantizerCodebook, LloydTrace)> {
    let n = samples.len() as f64;
    let mut points = seed_points(samples, m, seed);
    let mut assign = vec![0usize; samples.len()];
    let mut err = vec![0.0; samples.len()];
    let mut history = Vec::new();
    let mut done = false;
    for _ in 0..=LLOYD_MAX_ITER {
        for (k, &h) in samples.iter().enumerate() {
            let (i, d) = nearest_point(&points, h);
            assign[k] = i;
            err[k] = d;
        }
        let d = err.iter().sum::<f64>() / n;
        let prev = history.last().copied();
        check_monotone(prev, d)?;
        history.push(d);
        if converged(prev, d) {
            done = true;
            break;
        }
        if history.len() > LLOYD_MAX_ITER {
            break;
        }
        let mut sums = vec![Complex64::new(0.0, 0.0); m];
        let mut counts = vec![0usize; m];
        for (k, &h) in samples.iter().enumerate() {
            sums[assign[k]] += h;
            counts[assign[k]] += 1;
        }
        for i in 0..m {
            if counts[i] > 0 {
                points[i] = sums[i] / counts[i] as f64;
            }
        }
        // empty cells restart at the worst-served sample
        for i in 0..m {
            if counts[i] == 0 {
                let (k, _) = err
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |b, (k, &e)| if e > b.1 { (k, e) } else { b });
                points[i] = samples[k];
                err[k] = 0.0;
            }
        }
    }
    let distortion = *history.last().unwrap();
    Ok((
        QuantizerCodebook {
            points,
            cell_probs: Vec::new(),
            distortion,
            rate_bits: 0,
            prob_draws: 0,
            grid: None,
        },
        LloydTrace {
            distortion: history,
            converged: done,
        },
    ))
}

/// Scalar Lloyd-Max on sorted data, using prefix sums for cell means.
/// Returns the levels and the per-iteration sum of squared errors.
fn scalar_lloyd(sorted: &[f64], levels: usize) -> (Vec<f64>, Vec<f64>, bool) {
    let n = sorted.len();
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, &x) in sorted.iter().enumerate() {
        s1[i + 1] = s1[i] + x;
        s2[i + 1] = s2[i] + x * x;
    }
    // start from the cell means of equal-count cells
    let mut q: Vec<f64> = (0..levels)
        .map(|j| {
            let (a, b) = (j * n / levels, (j + 1) * n / levels);
            (s1[b] - s1[a]) / (b - a) as f64
        })
        .collect();
    let mut history = Vec::new();
    let mut done = false;
    for _ in 0..=LLOYD_MAX_ITER {
        q.dedup();
        // cell j holds samples nearer to q[j] than to its neighbours
        let mut edges = Vec::with_capacity(q.len() + 1);
        edges.push(0);
        for w in q.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            edges.push(sorted.partition_point(|&x| x <= mid));
        }
        edges.push(n);
        let mut sse = 0.0;
        for j in 0..q.len() {
            let (a, b) = (edges[j], edges[j + 1]);
            let c = (b - a) as f64;
            let (t1, t2) = (s1[b] - s1[a], s2[b] - s2[a]);
            sse += (t2 - 2.0 * q[j] * t1 + c * q[j] * q[j]).max(0.0);
        }
        let prev = history.last().copied();
        history.push(sse);
        if converged(prev, sse) || history.len() > LLOYD_MAX_ITER {
            done = converged(prev, sse);
            break;
        }
        let mut next = Vec::with_capacity(levels);
        for j in 0..q.len() {
            let (a, b) = (edges[j], edges[j + 1]);
            if b > a {
                next.push((s1[b] - s1[a]) / (b - a) as f64);
            }
        }
        q = next;
    }
    // refill lost levels by splitting the widest cells
    while q.len() < levels {
        let j = (0..q.len() - 1)
            .max_by(|&a, &b| (q[a + 1] - q[a]).total_cmp(&(q[b + 1] - q[b])))
            .unwrap_or(0);
        let mid = if q.len() > 1 { 0.5 * (q[j] + q[j + 1]) } else { q[0] + 1e-12 };
        q.insert(j + 1, mid);
    }
    (q, history, done)
}

fn product_design(samples: &[Complex64], levels: usize) -> Result<(QuantizerCodebook, LloydTrace)> {
    let n = samples.len() as f64;
    let mut re: Vec<f64> = samples.iter().map(|h| h.re).collect();
    let mut im: Vec<f64> = samples.iter().map(|h| h.im).collect();
    re.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let (qr, hr, dr) = scalar_lloyd(&re, levels);
    let (qi, hi, di) = scalar_lloyd(&im, levels);
    // combined history, padded with the converged value of the shorter run
    let len = hr.len().max(hi.len());
    let at = |h: &[f64], k: usize| h[k.min(h.len() - 1)];
    let history: Vec<f64> = (0..len).map(|k| (at(&hr, k) + at(&hi, k)) / n).collect();
    for w in history.windows(2) {
        check_monotone(Some(w[0]), w[1])?;
    }
    let points = qr
        .iter()
        .flat_map(|&a| qi.iter().map(move |&b| Complex64::new(a, b)))
        .collect();
    let mut book = QuantizerCodebook {
        points,
        cell_probs: Vec::new(),
        distortion: 0.0,
        rate_bits: 0,
        prob_draws: 0,
        grid: Some((qr, qi)),
    };
    book.distortion = book.mean_squared_error(samples);
    Ok((
        book,
        LloydTrace {
            distortion: history,
            converged: dr && di,
        },
    ))
}
