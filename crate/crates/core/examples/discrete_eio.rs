//! EIO capacity of the two-BSC scenario, next to its composite and compound
//! capacities, and the rate-loss bound against the hull minimiser.

use eio_lab::dmc::{
    composite_capacity_discrete, divergence_gap_bound, eio_capacity_discrete, DiscreteScenario,
    SubsetMask,
};

fn main() -> eio_lab::Result<()> {
    let scn = DiscreteScenario::from_json(include_str!("../data/two_bsc.json"))?;
    for gamma in [0.0, 0.05] {
        let eio = eio_capacity_discrete(&scn.with_gamma(gamma)?)?;
        println!(
            "gamma {gamma}: {:.6} bits over subset {:?} (mass {:.3})",
            eio.rate,
            eio.subset.members(),
            eio.subset_mass
        );
    }
    let composite = composite_capacity_discrete(&scn)?;
    println!("composite: {:.6} bits", composite.rate);

    let compound = eio_capacity_discrete(&scn.with_gamma(0.0)?)?;
    for theta in 0..2 {
        let g = divergence_gap_bound(&scn, &compound.input, SubsetMask::full(2), theta)?;
        println!(
            "state {theta}: hull infimum {:.6} <= {:.6} (holds: {})",
            g.lhs, g.rhs, g.holds
        );
    }
    Ok(())
}
