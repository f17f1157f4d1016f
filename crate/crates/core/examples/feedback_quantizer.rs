//! Mean EIO capacity with water-filling, under perfect feedback and with a
//! Lloyd codebook of a few bits.

use eio_lab::feedback::{
    design_feedback_codebook, mean_eio_perfect_feedback, mean_eio_quantized, WaterfillMode,
};
use eio_lab::harness::grid_model;

fn main() -> eio_lab::Result<()> {
    let (prior, training, power) = grid_model(8.0, 1, 0.0)?;
    for mode in [WaterfillMode::Fixed, WaterfillMode::Paper, WaterfillMode::Kkt] {
        let m = mean_eio_perfect_feedback(0.01, &prior, &training, power, mode, 10_000, 1)?;
        println!("perfect feedback, {mode:?}: {:.4} +- {:.4} bits", m.mean, m.std_err);
    }
    for bits in 1..=3 {
        let book = design_feedback_codebook(&prior, &training, bits, 20_000, 200_000, 2)?;
        let m = mean_eio_quantized(0.01, &book, power, WaterfillMode::Kkt, &prior, &training)?;
        println!(
            "{bits} bit feedback ({} points, distortion {:.4}): {:.4} +- {:.4} bits",
            book.len(),
            book.distortion,
            m.mean,
            m.std_err
        );
    }
    Ok(())
}
