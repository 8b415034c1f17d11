//! Ground and KMS states of a static metric with a non-trivial lapse via the
//! ultrastatic reduction.

use qfc::grid::{build_grid, MetricProfile};
use qfc::states::{purity_defect, static_reduction, validate_state};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(24, 2.0 * PI)?;
    let profile = MetricProfile::constant(1.5, 1.0)?
        .with_lapse(|x| 1.0 + 0.4 * x.cos());
    let red = static_reduction(&profile, &grid)?;
    println!("energy form min eigenvalue {:.4}", red.energy_min_eigenvalue);

    let ground = &red.ground;
    println!("ground: valid {} purity {:.2e}", validate_state(ground).valid, purity_defect(ground)?);
    for beta in [1.0, 3.0] {
        let kms = red.kms(beta)?;
        println!("kms β = {beta}: valid {} purity {:.3e}", validate_state(&kms).valid, purity_defect(&kms)?);
    }
    Ok(())
}
