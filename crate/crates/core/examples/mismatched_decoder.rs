//! Rate of the mismatched nearest-neighbour decoder against the EIO capacity
//! as the number of pilots grows.

use eio_lab::harness::grid_model;
use eio_lab::rician::{eio_capacity_post, eio_ml_capacity_post, posterior_params, MlConfig};
use eio_lab::Error;
use num_complex::Complex64;

fn main() -> eio_lab::Result<()> {
    let estimate = Complex64::new(1.1, 0.2);
    for n in [1, 3, 10, 30] {
        let (prior, training, power) = grid_model(10.0, n, 0.0)?;
        let post = posterior_params(estimate, &prior, &training);
        let eio = eio_capacity_post(0.01, &post, power, training.noise_var)?;
        match eio_ml_capacity_post(0.01, &post, estimate.arg(), power, training.noise_var, &MlConfig::default()) {
            Ok(ml) => println!(
                "N={n:2}: eio {eio:.4}, mismatched {:.4} (r {:.4}, phase {:.4})",
                ml.rate, ml.region.r_min, ml.region.phi_eps
            ),
            Err(Error::Infeasible(why)) => println!("N={n:2}: eio {eio:.4}, mismatched 0 ({why})"),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}
