//! Non-ergodic Ricean fading with a pilot-trained channel estimate.

pub mod capacity;
pub mod ml;
pub mod model;

pub use capacity::{
    composite_capacity_point, composite_capacity_post, composite_lower_bound,
    composite_lower_bound_post, eio_capacity_point, eio_capacity_post, magnitude_tail,
    mean_perfect_csi_capacity, percentile, perfect_csi_rate,
};
pub use ml::{eio_ml_capacity_point, eio_ml_capacity_post, ml_worst_case_rate, MlConfig, MlPoint};
pub use model::{
    complex_normal, posterior_params, sample_estimate_marginal, shrinkage, PosteriorParams,
    RicePrior, TrainingConfig,
};
