//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error drops below `max(abs_tol, rel_tol * |value|)`. A vector-valued
//! variant integrates several components sharing one set of nodes, which is
//! what the Nuttall-order series needs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Integrates `f` over `[lo, hi]`; a reversed interval flips the sign.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, cfg: QuadConfig) -> QuadResult {
    integrate_with_breaks(&mut f, &[lo, hi], cfg)
}

/// Like [`integrate`], but seeds the subdivision with the given sorted breakpoints.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: &mut F,
    breaks: &[f64],
    cfg: QuadConfig,
) -> QuadResult {
    assert!(breaks.len() >= 2);
    let (sign, pts): (f64, Vec<f64>) = if breaks[0] <= breaks[breaks.len() - 1] {
        (1.0, breaks.to_vec())
    } else {
        (-1.0, breaks.iter().rev().copied().collect())
    };
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = kronrod(f, w[0], w[1]);
        evals += 15;
        total += v;
        err += e;
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value: v,
            error: e,
        });
    }
    let mut converged = true;
    while err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if heap.len() >= cfg.max_intervals {
            converged = false;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // interval no longer divisible in floating point
            heap.push(worst);
            converged = false;
            break;
        }
        let (v1, e1) = kronrod(f, worst.lo, mid);
        let (v2, e2) = kronrod(f, mid, worst.hi);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed accumulated cancellation from the running updates
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let err: f64 = heap.iter().map(|s| s.error).sum();
    QuadResult {
        value: sign * total,
        error: err,
        evaluations: evals,
        converged,
    }
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone)]
pub struct VecQuadResult {
    pub values: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct VecSegment {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    key: f64,
}

impl PartialEq for VecSegment {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for VecSegment {}

impl PartialOrd for VecSegment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VecSegment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

fn kronrod_vec<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    dim: usize,
    lo: f64,
    hi: f64,
    buf: &mut [f64],
) -> (Vec<f64>, Vec<f64>) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(centre, buf);
    for i in 0..dim {
        k[i] = WGK[7] * buf[i];
        g[i] = WG[3] * buf[i];
    }
    let mut other = vec![0.0; dim];
    for j in 0..7 {
        let dx = half * XGK[j];
        f(centre - dx, buf);
        f(centre + dx, &mut other);
        for i in 0..dim {
            let s = buf[i] + other[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let errors = k.iter().zip(&g).map(|(a, b)| ((a - b) * half).abs()).collect();
    let values = k.into_iter().map(|a| a * half).collect();
    (values, errors)
}

/// Integrates a `dim`-component integrand over `[lo, hi]` (`lo <= hi`).
///
/// Subdivision is driven by the largest per-component error, and the
/// tolerance is measured against the largest component magnitude.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    lo: f64,
    hi: f64,
    cfg: QuadConfig,
) -> VecQuadResult {
    assert!(lo <= hi);
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let (values, errors) = kronrod_vec(&mut f, dim, lo, hi, &mut buf);
    let mut evals = 15;
    let key = errors.iter().copied().fold(0.0, f64::max);
    heap.push(VecSegment {
        lo,
        hi,
        values,
        errors,
        key,
    });
    let mut converged = true;
    loop {
        let mut tot = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        for s in &heap {
            for i in 0..dim {
                tot[i] += s.values[i];
                err[i] += s.errors[i];
            }
        }
        let scale = tot.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let worst_err = err.iter().copied().fold(0.0, f64::max);
        if worst_err <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            return VecQuadResult {
                values: tot,
                error: worst_err,
                evaluations: evals,
                converged,
            };
        }
        if heap.len() >= cfg.max_intervals {
            converged = false;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !converged || mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            let mut tot = vec![0.0; dim];
            for s in &heap {
                for i in 0..dim {
                    tot[i] += s.values[i];
                }
            }
            return VecQuadResult {
                values: tot,
                error: worst_err,
                evaluations: evals,
                converged: false,
            };
        }
        for (a, b) in [(worst.lo, mid), (mid, worst.hi)] {
            let (values, errors) = kronrod_vec(&mut f, dim, a, b, &mut buf);
            let key = errors.iter().copied().fold(0.0, f64::max);
            heap.push(VecSegment {
                lo: a,
                hi: b,
                values,
                errors,
                key,
            });
        }
        evals += 30;
    }
}
