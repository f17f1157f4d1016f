//! Marcum and Nuttall Q-functions, the exponential integral and sector
//! probabilities of a complex Gaussian.

use std::f64::consts::PI;

use eio_lab::rician::PosteriorParams;
use eio_lab::specfun::{
    bessel_i, exp_integral_e1, expected_log2_affine, marcum_q1, nuttall_q, sector_mass,
    SectorRegion,
};
use num_complex::Complex64;

fn main() -> eio_lab::Result<()> {
    println!("I_0(1) = {:.9}", bessel_i(0, 1.0)?);
    println!("I_3(80) = {:.6e}", bessel_i(3, 80.0)?);
    for (a, b) in [(0.0, 1.0), (2.0, 1.5), (5.0, 6.0)] {
        println!("Q1({a}, {b}) = {:.12}   Q_1,2 = {:.12}", marcum_q1(a, b)?, nuttall_q(2, a, b)?);
    }
    println!("E1(0.5) = {:.12}", exp_integral_e1(0.5)?);
    println!("E log2(1 + 3|x|^2), x ~ CN(0, 1): {:.9}", expected_log2_affine(1.0, 3.0, 1.0)?);

    let post = PosteriorParams::new(Complex64::new(1.2, 0.4), 0.3, 0.5)?;
    for phi in [0.1, 0.5, PI / 2.0, PI] {
        let mass = sector_mass(SectorRegion::new(0.8, phi)?, &post)?;
        println!("Pr(|H| >= 0.8, phase within {phi:.3}) = {mass:.9}");
    }
    Ok(())
}
