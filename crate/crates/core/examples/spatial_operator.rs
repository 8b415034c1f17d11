//! Build the discrete spatial operator on a flat circle and compare its
//! spectrum with the lattice dispersion relation.

use qfc::grid::{build_grid, MetricProfile};
use qfc::opcalc::{build_spatial_operator, flat_dispersion, func_calculus, sqrt_positive};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(16, 2.0 * PI)?;
    let profile = MetricProfile::flat(1.0)?;
    let a = build_spatial_operator(&profile, &grid, 0.0)?;
    let eps = sqrt_positive(&a)?;
    println!("self-adjoint defect of a: {:.2e}", a.self_adjoint_defect());

    let spectrum = a.spectral()?;
    let mut expected: Vec<f64> = (-8..8)
        .map(|k| flat_dispersion(k as f64, grid.spacing(), 1.0, 1.0))
        .collect();
    expected.sort_by(f64::total_cmp);
    for (got, want) in spectrum.eigenvalues().iter().zip(&expected).take(5) {
        println!("eigenvalue {got:.12}  dispersion {want:.12}");
    }

    // ε² should reproduce a
    let eps_sq = eps.compose(&eps)?;
    println!("‖ε² − a‖ = {:.2e}", eps_sq.sub(&a)?.norm());
    let inv = func_calculus(&a, |x| 1.0 / x)?;
    println!("‖a·a⁻¹ − 1‖ = {:.2e}", a.compose(&inv)?.sub(&qfc::opcalc::WeightedOperator::identity(a.weight().clone()))?.norm());
    Ok(())
}
