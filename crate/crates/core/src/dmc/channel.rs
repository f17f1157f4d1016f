//! Equivalent and strategy channels, Shannon strategies, mutual information.

use serde::{Deserialize, Serialize};

use super::scenario::DiscreteScenario;
use crate::error::{Error, Result};

/// Row-stochastic matrix: `rows` inputs, `cols` outputs, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Channel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Largest deviation of a row sum from one.
    pub fn stochastic_error(&self) -> f64 {
        (0..self.rows)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Output law under the input law `p`.
    pub fn output(&self, p: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.cols];
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (qj, w) in q.iter_mut().zip(self.row(i)) {
                *qj += pi * w;
            }
        }
        q
    }

    /// Convex combination `sum_k weights[k] channels[k]`.
    pub fn mixture(channels: &[&Channel], weights: &[f64]) -> Channel {
        let first = channels[0];
        let mut data = vec![0.0; first.data.len()];
        for (c, &w) in channels.iter().zip(weights) {
            for (d, v) in data.iter_mut().zip(&c.data) {
                *d += w * v;
            }
        }
        Channel::new(first.rows, first.cols, data)
    }
}

/// `x = f_t(u)`: the strategy index written in base `|X|`, digit `u`.
#[inline]
pub fn strategy_letter(t: usize, u: usize, nx: usize) -> usize {
    (t / nx.pow(u as u32)) % nx
}

/// The mapping `f_t` as a table over `u`.
pub fn strategy_map(t: usize, nx: usize, nu: usize) -> Vec<usize> {
    (0..nu).map(|u| strategy_letter(t, u, nx)).collect()
}

/// A law on Shannon strategies together with its cost constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDistribution {
    pub nx: usize,
    pub nu: usize,
    pub probs: Vec<f64>,
    /// `[x][u]`, flat.
    pub cost: Vec<f64>,
    pub budget: Option<f64>,
}

impl StrategyDistribution {
    pub fn uniform(nx: usize, nu: usize) -> Self {
        let n = nx.pow(nu as u32);
        Self {
            nx,
            nu,
            probs: vec![1.0 / n as f64; n],
            cost: vec![0.0; nx * nu],
            budget: None,
        }
    }

    pub fn for_scenario(scn: &DiscreteScenario, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != scn.n_strategies() {
            return Err(Error::Argument(format!(
                "expected {} strategy probabilities, got {}",
                scn.n_strategies(),
                probs.len()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "strategy probabilities must be a distribution (sum {sum})"
            )));
        }
        let cost = (0..scn.nx)
            .flat_map(|x| (0..scn.nu).map(move |u| (x, u)))
            .map(|(x, u)| scn.cost(x, u))
            .collect();
        Ok(Self {
            nx: scn.nx,
            nu: scn.nu,
            probs,
            cost,
            budget: scn.budget,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mapping(&self, t: usize) -> Vec<usize> {
        strategy_map(t, self.nx, self.nu)
    }

    /// Per-strategy cost `sum_u law(u) Phi(f_t(u), u)`.
    pub fn strategy_costs(&self, u_law: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|t| {
                (0..self.nu)
                    .map(|u| u_law[u] * self.cost[strategy_letter(t, u, self.nx) * self.nu + u])
                    .sum()
            })
            .collect()
    }

    pub fn expected_cost(&self, u_law: &[f64]) -> f64 {
        self.strategy_costs(u_law)
            .iter()
            .zip(&self.probs)
            .map(|(c, p)| c * p)
            .sum()
    }
}

/// `W_theta(y, v | x, u) = sum_s W_theta(y | x, s) mu(s, v | u, theta)`.
/// Rows are indexed `x * |U| + u`, columns `y * |V| + v`.
pub fn equivalent_channel(scn: &DiscreteScenario, theta: usize) -> Result<Channel> {
    check_state(scn, theta)?;
    let (nx, nu, nv, ny) = (scn.nx, scn.nu, scn.nv, scn.ny);
    let mu_u = scn.u_marginal(theta);
    let mut data = vec![0.0; nx * nu * ny * nv];
    for u in 0..nu {
        if mu_u[u] <= 0.0 {
            return Err(Error::DegenerateInput { state: theta, u });
        }
        for x in 0..nx {
            let row = &mut data[(x * nu + u) * ny * nv..(x * nu + u + 1) * ny * nv];
            for s in 0..scn.ns {
                for v in 0..nv {
                    let m = scn.mu(theta, s, u, v) / mu_u[u];
                    if m == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        row[y * nv + v] += scn.w(theta, s, x, y) * m;
                    }
                }
            }
        }
    }
    Ok(Channel::new(nx * nu, ny * nv, data))
}

/// `W_theta(y, v | t) = sum_u mu(u | theta) W_theta(y, v | f_t(u), u)`,
/// built from the joint accuracy law directly so that transmitter estimates
/// of zero probability are harmless.
pub fn strategy_channel(scn: &DiscreteScenario, theta: usize) -> Result<Channel> {
    check_state(scn, theta)?;
    let (nx, nu, nv, ny) = (scn.nx, scn.nu, scn.nv, scn.ny);
    let nt = scn.n_strategies();
    let mut data = vec![0.0; nt * ny * nv];
    for t in 0..nt {
        let row = &mut data[t * ny * nv..(t + 1) * ny * nv];
        for u in 0..nu {
            let x = strategy_letter(t, u, nx);
            for s in 0..scn.ns {
                for v in 0..nv {
                    let m = scn.mu(theta, s, u, v);
                    if m == 0.0 {
                        continue;
                    }
                    for y in 0..ny {
                        row[y * nv + v] += scn.w(theta, s, x, y) * m;
                    }
                }
            }
        }
    }
    Ok(Channel::new(nt, ny * nv, data))
}

fn check_state(scn: &DiscreteScenario, theta: usize) -> Result<()> {
    if theta >= scn.n_states() {
        return Err(Error::Argument(format!(
            "state index {theta} out of range ({} states)",
            scn.n_states()
        )));
    }
    Ok(())
}

/// `I(T; Y, V)` in bits for input law `p`; `0 log 0 = 0`.
pub fn mutual_information(p: &[f64], w: &Channel) -> f64 {
    let q = w.output(p);
    let mut total = 0.0;
    for (t, &pt) in p.iter().enumerate() {
        if pt <= 0.0 {
            continue;
        }
        total += pt * divergence_row(w.row(t), &q);
    }
    total.max(0.0)
}

pub fn mutual_information_strategy(input: &StrategyDistribution, w: &Channel) -> f64 {
    mutual_information(&input.probs, w)
}

/// `D(row || q)` in bits; infinite when `row` is not dominated by `q`.
pub fn divergence_row(row: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in row.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

/// `I(T; V)` for a channel with output index `y * nv + v`.
pub fn v_information(p: &[f64], w: &Channel, nv: usize) -> f64 {
    let ny = w.cols / nv;
    let mut vw = vec![0.0; w.rows * nv];
    for t in 0..w.rows {
        for y in 0..ny {
            for v in 0..nv {
                vw[t * nv + v] += w.get(t, y * nv + v);
            }
        }
    }
    mutual_information(p, &Channel::new(w.rows, nv, vw))
}
