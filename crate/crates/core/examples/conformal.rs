//! Conformal rescaling of the flat vacuum and comparison with the ground
//! state of the rescaled static problem.

use qfc::conformal::{diagram_defect, transform_cauchy_covariances, ConformalFactor};
use qfc::grid::{build_grid, MetricProfile};
use qfc::opcalc::{build_spatial_operator, sqrt_positive};
use qfc::states::{purity_defect, static_reduction, vacuum_covariances, validate_state};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(16, 2.0 * PI)?;
    let profile = MetricProfile::flat(1.0)?;
    let vac = vacuum_covariances(&sqrt_positive(&build_spatial_operator(&profile, &grid, 0.0)?)?)?;

    for factor in [ConformalFactor::constant(2.0), ConformalFactor::cosine(0.5)] {
        let c = factor.at_nodes(&grid, 0.0)?;
        let t = transform_cauchy_covariances(&vac, &c)?;
        let ground = static_reduction(&factor.rescale_static(&profile, &grid)?, &grid)?.ground;
        println!(
            "{}: valid {} purity {:.1e} diagram {:.1e} vs rescaled ground state {:.1e}",
            factor.label(),
            validate_state(&t).valid,
            purity_defect(&t)?,
            diagram_defect(vac.weight(), &c)?,
            t.distance(&ground)? / ground.norm()
        );
    }
    Ok(())
}
