//! Cauchy evolution through a time-dependent bump: symplecticity, cocycle
//! and transport of the vacuum.

use qfc::evolution::{evolve, transport_covariances, Scenario};
use qfc::grid::{build_grid, MetricProfile};
use qfc::linalg::op_norm;
use qfc::states::{purity_defect, vacuum_covariances, validate_state};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let profile = MetricProfile::gaussian_bump(0.3, 1.0, 1.0, 1.0)?;
    let scenario = Scenario::new(profile, build_grid(16, 2.0 * PI)?, -2.0, 2.0, None)?;
    println!("default steps per unit: {}", scenario.steps_per_unit());

    let u = evolve(&scenario, -1.0, 1.0)?;
    println!("symplecticity defect {:.2e}", u.symplecticity_defect());

    let first = evolve(&scenario, -1.0, 0.2)?;
    let second = evolve(&scenario, 0.2, 1.0)?;
    let composed = second.after(&first)?;
    println!("cocycle defect {:.2e}", op_norm(&(composed.frame() - u.frame())));

    let vac = vacuum_covariances(&scenario.eps(-1.0)?)?;
    let moved = transport_covariances(&vac, &u)?;
    let instantaneous = vacuum_covariances(&scenario.eps(1.0)?)?;
    println!(
        "transported vacuum: valid {} purity {:.2e}; distance to instantaneous vacuum {:.3e}",
        validate_state(&moved).valid,
        purity_defect(&moved)?,
        moved.distance(&instantaneous)?
    );
    Ok(())
}
