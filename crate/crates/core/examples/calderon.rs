//! Calderón projectors of the Wick-rotated operator: free, Dirichlet at
//! finite height and the β-periodic cylinder.

use qfc::calderon::{calderon_dirichlet, calderon_free, dirichlet_ladder, periodic_identification};
use qfc::grid::{build_grid, MetricProfile};
use qfc::opcalc::{build_spatial_operator, sqrt_positive};
use qfc::states::{purity_defect, vacuum_covariances};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(16, 2.0 * PI)?;
    let eps = sqrt_positive(&build_spatial_operator(&MetricProfile::flat(1.0)?, &grid, 0.0)?)?;

    let free = calderon_free(&eps)?.induced_covariances()?;
    println!("free projector vs vacuum: {:.2e}", free.distance(&vacuum_covariances(&eps)?)?);

    let dir = calderon_dirichlet(&eps, 2.0)?.induced_covariances()?;
    println!("Dirichlet T = 2 state purity {:.2e}", purity_defect(&dir)?);

    let horizons: Vec<f64> = (0..7).map(|k| 1.0 + 0.5 * k as f64).collect();
    let ladder = dirichlet_ladder(&eps, &horizons)?;
    println!("Dirichlet ladder rate {:.4} (2ε_min = {:.4})", ladder.fitted_rate, 2.0 * ladder.eps_min);

    let r = periodic_identification(&eps, 3f64.ln(), 1e-9)?;
    println!("β = ln 3 periodic restriction vs thermal: {:.2e} / {:.2e}", r.distance_plus, r.distance_minus);
    Ok(())
}
