//! EIO, compound and composite capacities of a finite channel family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{mutual_information, strategy_channel, Channel, StrategyDistribution};
use super::optimize::{maximize_min_information, Constraint, OptimizerConfig};
use super::scenario::DiscreteScenario;
use crate::error::{Error, Result};

/// Slack on posterior-mass comparisons.
pub const MASS_SLACK: f64 = 1e-12;
/// Rates closer than this are treated as ties (smallest mask wins).
pub const TIE_TOL: f64 = 1e-9;

/// A subset of the state family, stored as a bit mask over state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetMask {
    pub bits: u32,
}

impl SubsetMask {
    pub fn new(bits: u32) -> Self {
        Self { bits }
    }

    pub fn full(n: usize) -> Self {
        Self {
            bits: if n >= 32 { u32::MAX } else { (1u32 << n) - 1 },
        }
    }

    pub fn from_members(members: &[usize]) -> Self {
        Self {
            bits: members.iter().fold(0, |b, &i| b | (1 << i)),
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn members(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn mass(&self, posterior: &[f64]) -> f64 {
        posterior
            .iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Law of `U` under which the cost constraint is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CostMeasure {
    /// `sum_theta pi(theta) mu(u | theta)`, what the encoder actually sees.
    #[default]
    Marginalized,
    /// Separate constraint under `mu(u | theta)` for every state considered.
    PerState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EioDiscrete {
    pub rate: f64,
    pub subset: SubsetMask,
    pub subset_mass: f64,
    pub input: StrategyDistribution,
    /// State attaining the inner infimum.
    pub worst_state: usize,
    /// Grid cross-check of the inner maximisation, when it ran.
    pub grid_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeDiscrete {
    pub rate: f64,
    pub input: StrategyDistribution,
    pub channel: Channel,
}

fn cost_constraints(
    scn: &DiscreteScenario,
    states: &[usize],
    measure: CostMeasure,
) -> Vec<Constraint> {
    let Some(budget) = scn.budget else {
        return Vec::new();
    };
    let template = StrategyDistribution::uniform(scn.nx, scn.nu);
    let template = StrategyDistribution {
        cost: (0..scn.nx)
            .flat_map(|x| (0..scn.nu).map(move |u| (x, u)))
            .map(|(x, u)| scn.cost(x, u))
            .collect(),
        ..template
    };
    let laws: Vec<Vec<f64>> = match measure {
        CostMeasure::Marginalized => vec![scn.u_marginal_posterior()],
        CostMeasure::PerState => states.iter().map(|&th| scn.u_marginal(th)).collect(),
    };
    laws.iter()
        .map(|law| Constraint {
            coeffs: template.strategy_costs(law),
            bound: budget,
        })
        .collect()
}

fn strategy_channels(scn: &DiscreteScenario) -> Result<Vec<Channel>> {
    (0..scn.n_states()).map(|th| strategy_channel(scn, th)).collect()
}

/// `min_{theta in subset} I(T; Y_theta, V_theta)` and the minimising state.
pub fn compound_rate(
    input: &StrategyDistribution,
    scn: &DiscreteScenario,
    subset: SubsetMask,
) -> Result<(f64, usize)> {
    let members: Vec<usize> = subset
        .members()
        .into_iter()
        .filter(|&i| i < scn.n_states())
        .collect();
    if members.is_empty() {
        return Err(Error::Argument("compound rate over an empty subset".into()));
    }
    if input.len() != scn.n_strategies() {
        return Err(Error::Argument("input law does not match the strategy alphabet".into()));
    }
    let mut best = (f64::INFINITY, members[0]);
    for th in members {
        let v = mutual_information(&input.probs, &strategy_channel(scn, th)?);
        if v < best.0 {
            best = (v, th);
        }
    }
    Ok(best)
}

/// Masks with mass at least `threshold` from which no state can be removed
/// without dropping below it. Any feasible subset contains one of these and
/// has no larger compound rate, so they suffice for the outer supremum.
pub fn minimal_feasible_subsets(posterior: &[f64], threshold: f64) -> Vec<SubsetMask> {
    let n = posterior.len();
    let mut out = Vec::new();
    for bits in 1u32..(1u32 << n) {
        let m = SubsetMask::new(bits);
        let mass = m.mass(posterior);
        if mass < threshold - MASS_SLACK {
            continue;
        }
        let minimal = m
            .members()
            .iter()
            .all(|&i| mass - posterior[i] < threshold - MASS_SLACK);
        if minimal {
            out.push(m);
        }
    }
    out
}

/// EIO capacity of the family at the scenario's `gamma`.
pub fn eio_capacity_discrete(scn: &DiscreteScenario) -> Result<EioDiscrete> {
    eio_capacity_discrete_with(scn, CostMeasure::default(), &OptimizerConfig::default())
}

pub fn eio_capacity_discrete_with(
    scn: &DiscreteScenario,
    measure: CostMeasure,
    cfg: &OptimizerConfig,
) -> Result<EioDiscrete> {
    let threshold = 1.0 - scn.gamma;
    let subsets = minimal_feasible_subsets(&scn.posterior, threshold);
    if subsets.is_empty() {
        return Err(Error::Infeasible(format!(
            "no subset of states reaches posterior mass {threshold}"
        )));
    }
    let channels = strategy_channels(scn)?;
    let results: Vec<Result<(SubsetMask, super::optimize::MaxMin)>> = subsets
        .par_iter()
        .map(|&mask| {
            let members = mask.members();
            let refs: Vec<&Channel> = members.iter().map(|&i| &channels[i]).collect();
            let cons = cost_constraints(scn, &members, measure);
            maximize_min_information(&refs, &cons, cfg).map(|r| (mask, r))
        })
        .collect();
    let mut best: Option<(SubsetMask, super::optimize::MaxMin)> = None;
    for res in results {
        let (mask, r) = res?;
        let better = match &best {
            None => true,
            Some((bm, br)) => {
                r.value > br.value + TIE_TOL
                    || ((r.value - br.value).abs() <= TIE_TOL && mask.bits < bm.bits)
            }
        };
        if better {
            best = Some((mask, r));
        }
    }
    let (mask, r) = best.expect("at least one subset");
    let members = mask.members();
    let input = StrategyDistribution::for_scenario(scn, r.probs.clone())
        .or_else(|_| {
            // renormalise rounding drift before wrapping
            let s: f64 = r.probs.iter().sum();
            StrategyDistribution::for_scenario(scn, r.probs.iter().map(|p| p / s).collect())
        })?;
    Ok(EioDiscrete {
        rate: r.value,
        subset: mask,
        subset_mass: mask.mass(&scn.posterior),
        input,
        worst_state: members[r.argmin],
        grid_rate: r.grid_value,
    })
}

/// Capacity of the posterior-averaged channel `sum_theta pi(theta) W_theta`.
pub fn composite_capacity_discrete(scn: &DiscreteScenario) -> Result<CompositeDiscrete> {
    composite_capacity_discrete_with(scn, CostMeasure::default(), &OptimizerConfig::default())
}

pub fn composite_capacity_discrete_with(
    scn: &DiscreteScenario,
    measure: CostMeasure,
    cfg: &OptimizerConfig,
) -> Result<CompositeDiscrete> {
    let channels = strategy_channels(scn)?;
    let refs: Vec<&Channel> = channels.iter().collect();
    let avg = Channel::mixture(&refs, &scn.posterior);
    let all: Vec<usize> = (0..scn.n_states()).collect();
    let cons = cost_constraints(scn, &all, measure);
    let r = maximize_min_information(&[&avg], &cons, cfg)?;
    let s: f64 = r.probs.iter().sum();
    let input = StrategyDistribution::for_scenario(scn, r.probs.iter().map(|p| p / s).collect())?;
    Ok(CompositeDiscrete {
        rate: r.value,
        input,
        channel: avg,
    })
}
