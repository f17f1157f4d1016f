//! Power allocation and rate-limited feedback of the channel estimate.

pub mod mean;
pub mod power;
pub mod quantizer;

pub use mean::{
    codebook_gains, design_feedback_codebook, draw_estimates, mean_eio_perfect_feedback,
    mean_eio_quantized, mean_ergodic_capacity, mean_rate_with_allocation, quantized_posterior,
    waterfill, worst_case_gains, EstimateLaw, MeanEstimate,
};
pub use power::{waterfill_levels, PowerPolicy, WaterfillMode};
pub use quantizer::{
    codebook_size, lloyd_max_design, lloyd_max_design_traced, LloydTrace, QuantizerCodebook,
};
