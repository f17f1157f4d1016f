//! Draws channels from the posterior and counts how often the perfect-CSI rate
//! falls short of the EIO rate. The fraction should sit near the target.

use eio_lab::harness::{empirical_outage_stats, grid_model};
use num_complex::Complex64;

fn main() -> eio_lab::Result<()> {
    let (prior, training, power) = grid_model(8.0, 2, 3.0)?;
    let estimate = Complex64::new(0.6, 0.5);
    for gamma in [0.001, 0.01, 0.1, 0.3] {
        let o = empirical_outage_stats(gamma, estimate, power, &prior, &training, 1_000_000, 7)?;
        println!(
            "gamma {gamma:<6} observed {:.5} +- {:.5} over {} draws",
            o.fraction, o.std_err, o.draws
        );
    }
    Ok(())
}
