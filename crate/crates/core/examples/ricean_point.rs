//! Rates for one channel estimate of a Ricean channel trained with a single
//! pilot: EIO capacity, composite capacity and its lower bound.

use eio_lab::harness::grid_model;
use eio_lab::rician::{
    composite_capacity_point, composite_lower_bound, eio_capacity_point, percentile,
    posterior_params,
};
use num_complex::Complex64;

fn main() -> eio_lab::Result<()> {
    let estimate = Complex64::new(0.9, -0.3);
    println!("snr_db  r_opt    eio(0.01)  eio(0.1)  composite  lower_bound");
    for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
        let (prior, training, power) = grid_model(snr_db, 1, 0.0)?;
        let post = posterior_params(estimate, &prior, &training);
        let r = percentile(0.01, &post)?;
        let e1 = eio_capacity_point(0.01, estimate, power, training.noise_var, &prior, &training)?;
        let e2 = eio_capacity_point(0.1, estimate, power, training.noise_var, &prior, &training)?;
        let comp = composite_capacity_point(estimate, power, &prior, &training)?;
        let lb = composite_lower_bound(estimate, power, &prior, &training)?;
        println!("{snr_db:6.1}  {r:.4}   {e1:.4}     {e2:.4}    {comp:.4}     {lb:.4}");
    }
    Ok(())
}
