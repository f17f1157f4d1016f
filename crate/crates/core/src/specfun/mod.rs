//! Special functions: modified Bessel, Marcum/Nuttall Q, exponential integral,
//! and the Ricean sector probability.

pub mod bessel;
pub mod expint;
pub mod marcum;
pub mod quad;
pub mod sector;

pub use bessel::{bessel_i, bessel_i_scaled, bessel_i_scaled_orders, ln_bessel_i};
pub use expint::{exp_integral_e1, exp_integral_e1_scaled, expected_log2_affine};
pub use marcum::{marcum_density, marcum_q1, nuttall_q, nuttall_q_orders};
pub use sector::{
    sector_mass, sector_mass_about, sector_mass_quadrature, sector_mass_two_term, SectorMass,
    SectorMethod, SectorRegion,
};
