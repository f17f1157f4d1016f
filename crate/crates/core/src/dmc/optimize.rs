//! Maximisation of `min_k I(p, W_k)` over a polytope of input laws.
//!
//! The objective is a minimum of concave functions, so it is concave but not
//! smooth. A projected supergradient ascent with diminishing steps and random
//! restarts locates the optimum; a log-barrier Newton method applied to the
//! epigraph form `max s  s.t.  I(p, W_k) >= s` then polishes it, and is kept
//! only if it improves the ascent result.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::channel::{divergence_row, mutual_information, Channel};
use crate::error::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Linear constraint `coeffs . p <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Target accuracy of the optimum, in bits.
    pub tol: f64,
    pub seed: u64,
    pub polish: bool,
    /// Grid cross-check is run when the number of inputs is at most this.
    pub grid_max_inputs: usize,
    pub grid_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 3000,
            tol: 1e-6,
            seed: 0x5eed,
            polish: true,
            grid_max_inputs: 4,
            grid_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMin {
    pub value: f64,
    pub probs: Vec<f64>,
    /// Index of the channel attaining the minimum at `probs`.
    pub argmin: usize,
    /// Best value on the simplex grid, when the cross-check ran.
    pub grid_value: Option<f64>,
}

/// Value of the objective and the index of the minimising channel. Ties go
/// to the lowest index.
pub fn min_information(p: &[f64], channels: &[&Channel]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, w) in channels.iter().enumerate() {
        let v = mutual_information(p, w);
        if v < best.0 {
            best = (v, k);
        }
    }
    best
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn project_halfspace(v: &[f64], c: &Constraint) -> Vec<f64> {
    let dot: f64 = v.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum();
    let nn: f64 = c.coeffs.iter().map(|a| a * a).sum();
    if dot <= c.bound || nn == 0.0 {
        return v.to_vec();
    }
    let s = (dot - c.bound) / nn;
    v.iter().zip(&c.coeffs).map(|(a, b)| a - s * b).collect()
}

fn violation(p: &[f64], cons: &[Constraint]) -> f64 {
    cons.iter()
        .map(|c| p.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum::<f64>() - c.bound)
        .fold(0.0, f64::max)
}

/// Projection onto the simplex intersected with the half-spaces, by Dykstra's
/// alternating scheme (exact simplex projection when there are none).
pub fn project_feasible(v: &[f64], cons: &[Constraint]) -> Vec<f64> {
    if cons.is_empty() {
        return project_simplex(v);
    }
    let n = v.len();
    let sets = cons.len() + 1;
    let mut incr = vec![vec![0.0; n]; sets];
    let mut x = v.to_vec();
    for _ in 0..5000 {
        let prev = x.clone();
        for (k, inc) in incr.iter_mut().enumerate() {
            let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let p = if k < cons.len() {
                project_halfspace(&y, &cons[k])
            } else {
                project_simplex(&y)
            };
            for i in 0..n {
                inc[i] = y[i] - p[i];
            }
            x = p;
        }
        let change: f64 = x.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        if change < 1e-15 {
            break;
        }
    }
    x
}

/// Maximises `min_k I(p, W_k)` over input laws `p` satisfying `cons`.
pub fn maximize_min_information(
    channels: &[&Channel],
    cons: &[Constraint],
    cfg: &OptimizerConfig,
) -> Result<MaxMin> {
    if channels.is_empty() {
        return Err(Error::Argument("no channels to optimise over".into()));
    }
    let n = channels[0].rows;
    if channels.iter().any(|c| c.rows != n) {
        return Err(Error::Argument("channels disagree on the input alphabet".into()));
    }
    let start = project_feasible(&vec![1.0 / n as f64; n], cons);
    if violation(&start, cons) > 1e-9 {
        return Err(Error::Infeasible(
            "no input law satisfies the cost constraint".into(),
        ));
    }
    if n == 1 {
        let (value, argmin) = min_information(&start, channels);
        return Ok(MaxMin {
            value,
            probs: start,
            argmin,
            grid_value: None,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirichlet = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
    let mut best_p = start.clone();
    let mut best = min_information(&start, channels).0;
    for r in 0..cfg.restarts.max(1) {
        let p0 = if r == 0 {
            start.clone()
        } else {
            let g: Vec<f64> = (0..n).map(|_| dirichlet.sample(&mut rng)).collect();
            let s: f64 = g.iter().sum();
            project_feasible(&g.iter().map(|x| x / s).collect::<Vec<_>>(), cons)
        };
        let (v, p) = ascend(channels, cons, p0, cfg);
        if v > best + 1e-15 {
            best = v;
            best_p = p;
        }
    }

    if cfg.polish {
        if let Some((v, p)) = polish(channels, cons, &best_p) {
            if v > best && violation(&p, cons) <= 1e-9 {
                best = v;
                best_p = p;
            }
        }
    }

    let mut grid_value = None;
    if n <= cfg.grid_max_inputs && cfg.grid_step > 0.0 {
        let (gv, gp) = grid_search(channels, cons, cfg.grid_step);
        grid_value = Some(gv);
        if gv > best + 1e-12 {
            // the grid found a better basin; restart the local search there
            best_p = gp.clone();
            best = gv;
            let (v, p) = ascend(channels, cons, gp, cfg);
            if v > best {
                best = v;
                best_p = p;
            }
            if cfg.polish {
                if let Some((v, p)) = polish(channels, cons, &best_p) {
                    if v > best && violation(&p, cons) <= 1e-9 {
                        best_p = p;
                    }
                }
            }
        }
    }
    let (value, argmin) = min_information(&best_p, channels);
    Ok(MaxMin {
        value,
        probs: best_p,
        argmin,
        grid_value,
    })
}

/// Gradient of `I(p, W)` up to an additive constant: `D(W_t || Q)`.
fn supergradient(p: &[f64], w: &Channel) -> Vec<f64> {
    let q = w.output(p);
    (0..w.rows).map(|t| divergence_row(w.row(t), &q).min(1e6)).collect()
}

fn ascend(
    channels: &[&Channel],
    cons: &[Constraint],
    mut p: Vec<f64>,
    cfg: &OptimizerConfig,
) -> (f64, Vec<f64>) {
    let (mut best, _) = min_information(&p, channels);
    let mut best_p = p.clone();
    let mut mark = best;
    const WINDOW: usize = 150;
    for k in 1..=cfg.max_iter {
        let (_, arg) = min_information(&p, channels);
        let g = supergradient(&p, channels[arg]);
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let norm = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let step = 0.5 / (k as f64).sqrt() / norm;
        let y: Vec<f64> = p.iter().zip(&g).map(|(a, b)| a + step * b).collect();
        p = project_feasible(&y, cons);
        let (v, _) = min_information(&p, channels);
        if v > best {
            best = v;
            best_p.clone_from(&p);
        }
        if k % WINDOW == 0 {
            if best - mark < 0.1 * cfg.tol {
                break;
            }
            mark = best;
        }
    }
    (best, best_p)
}

/// Per-channel value, gradient and Hessian of `I(p, W)` in bits.
fn info_derivatives(p: &[f64], w: &Channel) -> (f64, Vec<f64>, DMatrix<f64>) {
    let n = w.rows;
    let q = w.output(p);
    let mut grad = vec![0.0; n];
    let mut value = 0.0;
    for t in 0..n {
        let d = divergence_row(w.row(t), &q);
        grad[t] = d - LOG2_E;
        value += p[t] * d;
    }
    let mut hess = DMatrix::zeros(n, n);
    for (o, &qo) in q.iter().enumerate() {
        if qo <= 0.0 {
            continue;
        }
        for t in 0..n {
            let a = w.get(t, o);
            if a == 0.0 {
                continue;
            }
            for s in t..n {
                let b = w.get(s, o);
                if b != 0.0 {
                    hess[(t, s)] -= LOG2_E * a * b / qo;
                }
            }
        }
    }
    for t in 0..n {
        for s in 0..t {
            hess[(t, s)] = hess[(s, t)];
        }
    }
    (value, grad, hess)
}

struct Barrier<'a> {
    channels: &'a [&'a Channel],
    cons: &'a [Constraint],
    n: usize,
}

impl Barrier<'_> {
    /// Barrier objective at `(p, s)`, or `None` outside the domain.
    fn value(&self, tau: f64, p: &[f64], s: f64) -> Option<f64> {
        if p.iter().any(|&x| x <= 0.0) {
            return None;
        }
        let mut f = -tau * s;
        for w in self.channels {
            let h = mutual_information(p, w) - s;
            if h <= 0.0 {
                return None;
            }
            f -= h.ln();
        }
        for x in p {
            f -= x.ln();
        }
        for c in self.cons {
            let sl = c.bound - p.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum::<f64>();
            if sl <= 0.0 {
                return None;
            }
            f -= sl.ln();
        }
        Some(f)
    }

    fn newton_step(&self, tau: f64, p: &[f64], s: f64) -> Option<(DVector<f64>, f64)> {
        let n = self.n;
        let dim = n + 1;
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        g[n] = -tau;
        for w in self.channels {
            let (val, gi, hi) = info_derivatives(p, w);
            let slack = val - s;
            if slack <= 0.0 {
                return None;
            }
            let inv = 1.0 / slack;
            let inv2 = inv * inv;
            for t in 0..n {
                g[t] -= gi[t] * inv;
                for u in 0..n {
                    h[(t, u)] += gi[t] * gi[u] * inv2 - hi[(t, u)] * inv;
                }
                h[(t, n)] -= gi[t] * inv2;
                h[(n, t)] -= gi[t] * inv2;
            }
            g[n] += inv;
            h[(n, n)] += inv2;
        }
        for t in 0..n {
            g[t] -= 1.0 / p[t];
            h[(t, t)] += 1.0 / (p[t] * p[t]);
        }
        for c in self.cons {
            let sl = c.bound - p.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum::<f64>();
            for t in 0..n {
                g[t] += c.coeffs[t] / sl;
                for u in 0..n {
                    h[(t, u)] += c.coeffs[t] * c.coeffs[u] / (sl * sl);
                }
            }
        }
        // KKT system with the equality sum(p) = 1
        let mut kkt = DMatrix::zeros(dim + 1, dim + 1);
        kkt.view_mut((0, 0), (dim, dim)).copy_from(&h);
        for t in 0..n {
            kkt[(t, dim)] = 1.0;
            kkt[(dim, t)] = 1.0;
        }
        let mut rhs = DVector::zeros(dim + 1);
        for i in 0..dim {
            rhs[i] = -g[i];
        }
        let sol = kkt.lu().solve(&rhs)?;
        let step = sol.rows(0, dim).into_owned();
        let decrement = -g.dot(&step);
        if !decrement.is_finite() {
            return None;
        }
        Some((step, decrement))
    }
}

fn polish(channels: &[&Channel], cons: &[Constraint], p0: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = p0.len();
    // strictly interior starting point
    let interior = interior_point(n, cons)?;
    let mut p: Vec<f64> = p0
        .iter()
        .zip(&interior)
        .map(|(a, b)| 0.999 * a + 0.001 * b)
        .collect();
    let strict = cons
        .iter()
        .all(|c| p.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum::<f64>() < c.bound);
    if !strict {
        return None;
    }
    let (m0, _) = min_information(&p, channels);
    let mut s = m0 - 1e-3;
    let bar = Barrier { channels, cons, n };
    let m = (channels.len() + n + cons.len()) as f64;
    let mut tau = m;
    while m / tau > 1e-11 {
        for _ in 0..100 {
            let (step, dec) = bar.newton_step(tau, &p, s)?;
            if dec / 2.0 < 1e-13 {
                break;
            }
            let f0 = bar.value(tau, &p, s)?;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-14 {
                let pn: Vec<f64> = (0..n).map(|t| p[t] + alpha * step[t]).collect();
                let sn = s + alpha * step[n];
                if let Some(f1) = bar.value(tau, &pn, sn) {
                    if f1 <= f0 - 0.25 * alpha * dec {
                        p = pn;
                        s = sn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        tau *= 8.0;
    }
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    let (v, _) = min_information(&p, channels);
    Some((v, p))
}

fn interior_point(n: usize, cons: &[Constraint]) -> Option<Vec<f64>> {
    let uniform = vec![1.0 / n as f64; n];
    let strictly = |p: &[f64]| {
        cons.iter()
            .all(|c| p.iter().zip(&c.coeffs).map(|(a, b)| a * b).sum::<f64>() < c.bound)
    };
    if strictly(&uniform) {
        return Some(uniform);
    }
    if cons.len() == 1 {
        // lean towards the cheapest input
        let c = &cons[0];
        let cheap = (0..n)
            .min_by(|&a, &b| c.coeffs[a].total_cmp(&c.coeffs[b]))
            .expect("non-empty");
        for eta in [0.5, 0.1, 0.01, 1e-3] {
            let mut p = vec![eta / n as f64; n];
            p[cheap] += 1.0 - eta;
            if strictly(&p) {
                return Some(p);
            }
        }
    }
    None
}

/// Exhaustive search on the simplex grid of the given step.
pub fn grid_search(channels: &[&Channel], cons: &[Constraint], step: f64) -> (f64, Vec<f64>) {
    let n = channels[0].rows;
    let m = (1.0 / step).round() as usize;
    let mut best = (f64::NEG_INFINITY, vec![1.0 / n as f64; n]);
    let mut counts = vec![0usize; n];
    fn rec(
        i: usize,
        left: usize,
        m: usize,
        counts: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if i + 1 == counts.len() {
            counts[i] = left;
            visit(counts);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, m, counts, visit);
        }
    }
    let mut visit = |c: &[usize]| {
        let p: Vec<f64> = c.iter().map(|&k| k as f64 / m as f64).collect();
        if violation(&p, cons) > 1e-12 {
            return;
        }
        let (v, _) = min_information(&p, channels);
        if v > best.0 {
            best = (v, p);
        }
    };
    rec(0, m, m, &mut counts, &mut visit);
    best
}
