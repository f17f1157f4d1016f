//! Long-term power allocation over a discrete law of worst-case gains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaterfillMode {
    /// `P / s2 = [1/r0 - 1/r*]_+`, first power of the gain.
    Paper,
    /// `P = [lambda - s2 / r*^2]_+`, the stationarity condition of the mean log-rate.
    #[default]
    Kkt,
    /// `P = budget` everywhere.
    Fixed,
}

impl fmt::Display for WaterfillMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Kkt => "kkt",
            Self::Fixed => "fixed",
        })
    }
}

impl FromStr for WaterfillMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "kkt" => Ok(Self::Kkt),
            "fixed" => Ok(Self::Fixed),
            _ => Err(Error::invalid("mode", format!("expected paper, kkt or fixed, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    /// `r0` in paper mode, `lambda` in kkt mode, the budget in fixed mode.
    pub water_level: f64,
    pub budget: f64,
    pub mode: WaterfillMode,
    /// Power per atom of the law.
    pub table: Vec<f64>,
    /// Set when the budget could not be spent, e.g. every gain is zero.
    pub warning: Option<String>,
}

impl PowerPolicy {
    /// `sum_i weights[i] table[i]`.
    pub fn expected_power(&self, weights: &[f64]) -> f64 {
        self.table.iter().zip(weights).map(|(p, w)| p * w).sum()
    }
}

/// Water-filling over atoms with worst-case magnitudes `r_star` and
/// probabilities `weights` (summing to one), spending `budget` on average.
/// The level is found exactly by sorting the thresholds.
pub fn waterfill_levels(
    r_star: &[f64],
    weights: &[f64],
    budget: f64,
    noise_var: f64,
    mode: WaterfillMode,
) -> Result<PowerPolicy> {
    if !(budget > 0.0) || !budget.is_finite() {
        return Err(Error::domain("waterfill", format!("budget must be positive, got {budget}")));
    }
    if !(noise_var > 0.0) {
        return Err(Error::domain("waterfill", format!("noise variance must be positive, got {noise_var}")));
    }
    if r_star.len() != weights.len() || r_star.is_empty() {
        return Err(Error::invalid("weights", "one weight per atom required"));
    }
    if let Some(i) = r_star.iter().position(|r| !(*r >= 0.0)) {
        return Err(Error::invalid(format!("r_star[{i}]"), "must be >= 0"));
    }
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0)) {
        return Err(Error::invalid(format!("weights[{i}]"), "must be >= 0"));
    }
    if mode == WaterfillMode::Fixed {
        return Ok(PowerPolicy {
            water_level: budget,
            budget,
            mode,
            table: vec![budget; r_star.len()],
            warning: None,
        });
    }
    // each atom gets slope * [c - threshold]_+ once the level c passes its threshold
    let (slope, threshold): (f64, Box<dyn Fn(f64) -> f64>) = match mode {
        WaterfillMode::Paper => (noise_var, Box::new(|r: f64| 1.0 / r)),
        _ => (1.0, Box::new(move |r: f64| noise_var / (r * r))),
    };
    let mut atoms: Vec<(f64, f64)> = r_star
        .iter()
        .zip(weights)
        .filter(|(&r, &w)| r > 0.0 && w > 0.0)
        .map(|(&r, &w)| (threshold(r), w))
        .filter(|(t, _)| t.is_finite())
        .collect();
    if atoms.is_empty() {
        return Ok(PowerPolicy {
            water_level: 0.0,
            budget,
            mode,
            table: vec![0.0; r_star.len()],
            warning: Some("every atom has zero worst-case gain; no power allocated".into()),
        });
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    // E(c) = slope * sum_{t_i < c} w_i (c - t_i); walk the breakpoints
    let (mut sw, mut swt) = (0.0, 0.0);
    let mut level = f64::NAN;
    for k in 0..atoms.len() {
        sw += atoms[k].1;
        swt += atoms[k].1 * atoms[k].0;
        let c = (budget / slope + swt) / sw;
        if k + 1 == atoms.len() || c <= atoms[k + 1].0 {
            level = c;
            break;
        }
    }
    let table = r_star
        .iter()
        .map(|&r| {
            if r > 0.0 {
                let t = threshold(r);
                if t.is_finite() {
                    return slope * (level - t).max(0.0);
                }
            }
            0.0
        })
        .collect();
    let water_level = if mode == WaterfillMode::Paper { 1.0 / level } else { level };
    Ok(PowerPolicy {
        water_level,
        budget,
        mode,
        table,
        warning: None,
    })
}
