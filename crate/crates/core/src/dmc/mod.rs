//! Finite-alphabet channel families known through a state estimate.

pub mod capacity;
pub mod channel;
pub mod gap;
pub mod optimize;
pub mod scenario;

pub use capacity::{
    compound_rate, composite_capacity_discrete, composite_capacity_discrete_with,
    eio_capacity_discrete, eio_capacity_discrete_with, minimal_feasible_subsets,
    CompositeDiscrete, CostMeasure, EioDiscrete, SubsetMask,
};
pub use channel::{
    equivalent_channel, mutual_information, mutual_information_strategy, strategy_channel,
    v_information, Channel, StrategyDistribution,
};
pub use gap::{divergence_gap_bound, gap_bound_for_channels, GapBound};
pub use optimize::{maximize_min_information, Constraint, MaxMin, OptimizerConfig};
pub use scenario::{DiscreteScenario, ScenarioFile};
