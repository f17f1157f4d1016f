//! Finite channel families with side information, and their JSON form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state count accepted by subset enumeration.
pub const MAX_STATES: usize = 20;
/// Tolerance on probability rows in scenario files.
pub const ROW_TOL: f64 = 1e-9;

/// A family `W_theta(y | x, s)` together with the accuracy statistic
/// `mu(s, u, v | theta)` and the posterior `pi(theta)`, all conditioned on one
/// fixed state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScenario {
    pub states: Vec<String>,
    pub nx: usize,
    pub ns: usize,
    pub nu: usize,
    pub nv: usize,
    pub ny: usize,
    /// Flat `[theta][s][x][y]`.
    channel: Vec<f64>,
    /// Flat `[theta][s][u][v]`, a joint law of `(s, u, v)` for each state.
    accuracy: Vec<f64>,
    pub posterior: Vec<f64>,
    /// Flat `[x][u]`.
    cost: Vec<f64>,
    /// `None` means unconstrained.
    pub budget: Option<f64>,
    pub gamma: f64,
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub states: Vec<String>,
    pub posterior: Vec<f64>,
    /// `[theta][s][x][y]`
    pub channel: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[theta][s][u][v]`
    pub accuracy: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[x][u]`
    #[serde(default)]
    pub cost: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

fn dims4(name: &str, t: &[Vec<Vec<Vec<f64>>>]) -> Result<[usize; 4]> {
    let a = t.len();
    let b = t.first().map_or(0, Vec::len);
    let c = t.first().and_then(|v| v.first()).map_or(0, Vec::len);
    let d = t
        .first()
        .and_then(|v| v.first())
        .and_then(|v| v.first())
        .map_or(0, Vec::len);
    for (i, ti) in t.iter().enumerate() {
        if ti.len() != b {
            return Err(Error::invalid(format!("{name}[{i}]"), format!("expected {b} entries, found {}", ti.len())));
        }
        for (j, tij) in ti.iter().enumerate() {
            if tij.len() != c {
                return Err(Error::invalid(
                    format!("{name}[{i}][{j}]"),
                    format!("expected {c} entries, found {}", tij.len()),
                ));
            }
            for (k, row) in tij.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::invalid(
                        format!("{name}[{i}][{j}][{k}]"),
                        format!("expected {d} entries, found {}", row.len()),
                    ));
                }
            }
        }
    }
    if a == 0 || b == 0 || c == 0 || d == 0 {
        return Err(Error::invalid(name, "every dimension must be non-empty"));
    }
    Ok([a, b, c, d])
}

fn check_entries(name: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(
            format!("{name} (flat index {i})"),
            format!("entries must be finite and non-negative, found {}", values[i]),
        ));
    }
    Ok(())
}

impl DiscreteScenario {
    /// Builds and validates a scenario. Rows of `channel` must each sum to
    /// one, and each state's accuracy table must sum to one, within `tol`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        dims: [usize; 5],
        channel: Vec<f64>,
        accuracy: Vec<f64>,
        posterior: Vec<f64>,
        cost: Option<Vec<f64>>,
        budget: Option<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let [nx, ns, nu, nv, ny] = dims;
        let n = states.len();
        if n == 0 {
            return Err(Error::invalid("states", "need at least one state"));
        }
        if n > MAX_STATES {
            return Err(Error::invalid(
                "states",
                format!("at most {MAX_STATES} states supported, found {n}"),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("dimensions", "alphabet sizes must be positive"));
        }
        if channel.len() != n * ns * nx * ny {
            return Err(Error::invalid("channel", "length does not match dimensions"));
        }
        if accuracy.len() != n * ns * nu * nv {
            return Err(Error::invalid("accuracy", "length does not match dimensions"));
        }
        if posterior.len() != n {
            return Err(Error::invalid(
                "posterior",
                format!("expected {n} entries, found {}", posterior.len()),
            ));
        }
        let cost = cost.unwrap_or_else(|| vec![0.0; nx * nu]);
        if cost.len() != nx * nu {
            return Err(Error::invalid("cost", format!("expected {nx}x{nu} table")));
        }
        check_entries("channel", &channel)?;
        check_entries("accuracy", &accuracy)?;
        check_entries("posterior", &posterior)?;
        check_entries("cost", &cost)?;
        if let Some(b) = budget {
            if !(b >= 0.0) {
                return Err(Error::invalid("budget", format!("must be >= 0, found {b}")));
            }
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", format!("must lie in [0, 1), found {gamma}")));
        }
        let tol = ROW_TOL;
        for th in 0..n {
            for s in 0..ns {
                for x in 0..nx {
                    let off = ((th * ns + s) * nx + x) * ny;
                    let sum: f64 = channel[off..off + ny].iter().sum();
                    if (sum - 1.0).abs() > tol {
                        return Err(Error::invalid(
                            format!("channel[{th}][{s}][{x}]"),
                            format!("row sums to {sum}, expected 1"),
                        ));
                    }
                }
            }
            let off = th * ns * nu * nv;
            let sum: f64 = accuracy[off..off + ns * nu * nv].iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::invalid(
                    format!("accuracy[{th}]"),
                    format!("joint law over (s, u, v) sums to {sum}, expected 1"),
                ));
            }
        }
        let sum: f64 = posterior.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::invalid(
                "posterior",
                format!("sums to {sum}, expected 1"),
            ));
        }
        // absorb the tolerated drift so that full-family mass is exactly 1
        let posterior = posterior.iter().map(|p| p / sum).collect();
        Ok(Self {
            states,
            nx,
            ns,
            nu,
            nv,
            ny,
            channel,
            accuracy,
            posterior,
            cost,
            budget,
            gamma,
        })
    }

    /// Family of plain channels `W_theta(y | x)` without side information.
    pub fn plain(channels: &[Vec<Vec<f64>>], posterior: Vec<f64>, gamma: f64) -> Result<Self> {
        let n = channels.len();
        let nx = channels.first().map_or(0, Vec::len);
        let ny = channels
            .first()
            .and_then(|c| c.first())
            .map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n * nx * ny);
        for (th, c) in channels.iter().enumerate() {
            if c.len() != nx || c.iter().any(|r| r.len() != ny) {
                return Err(Error::invalid(format!("channel[{th}]"), "ragged channel matrix"));
            }
            flat.extend(c.iter().flatten());
        }
        Self::new(
            (0..n).map(|i| format!("theta{i}")).collect(),
            [nx, 1, 1, 1, ny],
            flat,
            vec![1.0; n],
            posterior,
            None,
            None,
            gamma,
        )
    }

    pub fn from_file_struct(f: ScenarioFile) -> Result<Self> {
        let n = f.states.len();
        let [cn, ns, nx, ny] = dims4("channel", &f.channel)?;
        let [an, ans, nu, nv] = dims4("accuracy", &f.accuracy)?;
        if cn != n || an != n {
            return Err(Error::invalid(
                "states",
                format!("{n} labels but channel has {cn} and accuracy has {an} states"),
            ));
        }
        if ans != ns {
            return Err(Error::invalid(
                "accuracy",
                format!("state-of-channel alphabet {ans} differs from channel's {ns}"),
            ));
        }
        let cost = match f.cost {
            None => None,
            Some(c) => {
                if c.len() != nx || c.iter().any(|r| r.len() != nu) {
                    return Err(Error::invalid("cost", format!("expected a {nx}x{nu} table")));
                }
                Some(c.into_iter().flatten().collect())
            }
        };
        Self::new(
            f.states,
            [nx, ns, nu, nv, ny],
            f.channel.into_iter().flatten().flatten().flatten().collect(),
            f.accuracy.into_iter().flatten().flatten().flatten().collect(),
            f.posterior,
            cost,
            f.budget,
            f.gamma.unwrap_or(0.0),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file_struct(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_struct(&self) -> ScenarioFile {
        let (nx, ns, nu, nv, ny) = (self.nx, self.ns, self.nu, self.nv, self.ny);
        let channel = (0..self.n_states())
            .map(|th| {
                (0..ns)
                    .map(|s| (0..nx).map(|x| (0..ny).map(|y| self.w(th, s, x, y)).collect()).collect())
                    .collect()
            })
            .collect();
        let accuracy = (0..self.n_states())
            .map(|th| {
                (0..ns)
                    .map(|s| (0..nu).map(|u| (0..nv).map(|v| self.mu(th, s, u, v)).collect()).collect())
                    .collect()
            })
            .collect();
        ScenarioFile {
            states: self.states.clone(),
            posterior: self.posterior.clone(),
            channel,
            accuracy,
            cost: Some((0..nx).map(|x| (0..nu).map(|u| self.cost(x, u)).collect()).collect()),
            budget: self.budget,
            gamma: Some(self.gamma),
        }
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", format!("must lie in [0, 1), found {gamma}")));
        }
        Ok(Self {
            gamma,
            ..self.clone()
        })
    }

    pub fn with_budget(&self, cost: Vec<f64>, budget: Option<f64>) -> Result<Self> {
        let mut s = self.clone();
        if cost.len() != s.nx * s.nu {
            return Err(Error::invalid("cost", "table size mismatch"));
        }
        check_entries("cost", &cost)?;
        s.cost = cost;
        s.budget = budget;
        Ok(s)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Number of Shannon strategies `|X|^|U|`.
    pub fn n_strategies(&self) -> usize {
        self.nx.pow(self.nu as u32)
    }

    #[inline]
    pub fn w(&self, theta: usize, s: usize, x: usize, y: usize) -> f64 {
        self.channel[((theta * self.ns + s) * self.nx + x) * self.ny + y]
    }

    #[inline]
    pub fn mu(&self, theta: usize, s: usize, u: usize, v: usize) -> f64 {
        self.accuracy[((theta * self.ns + s) * self.nu + u) * self.nv + v]
    }

    #[inline]
    pub fn cost(&self, x: usize, u: usize) -> f64 {
        self.cost[x * self.nu + u]
    }

    /// `mu(u | theta)`.
    pub fn u_marginal(&self, theta: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.nu];
        for s in 0..self.ns {
            for (u, mu) in m.iter_mut().enumerate() {
                for v in 0..self.nv {
                    *mu += self.mu(theta, s, u, v);
                }
            }
        }
        m
    }

    /// `sum_theta pi(theta) mu(u | theta)`, the law of `U` seen by the encoder.
    pub fn u_marginal_posterior(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nu];
        for th in 0..self.n_states() {
            for (acc, v) in m.iter_mut().zip(self.u_marginal(th)) {
                *acc += self.posterior[th] * v;
            }
        }
        m
    }
}
