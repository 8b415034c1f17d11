//! Vacuum and thermal Cauchy-surface covariances: validation, purity, KMS
//! and a four-point function.

use qfc::grid::{build_grid, fourier_mode, MetricProfile};
use qfc::linalg::CVec;
use qfc::opcalc::{build_spatial_operator, sqrt_positive};
use qfc::states::{kms_defect, npoint_function, purity_defect, thermal_covariances, vacuum_covariances, validate_state};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(24, 2.0 * PI)?;
    let profile = MetricProfile::flat(1.0)?;
    let eps = sqrt_positive(&build_spatial_operator(&profile, &grid, 0.0)?)?;

    let vac = vacuum_covariances(&eps)?;
    let report = validate_state(&vac);
    println!("vacuum: valid {} ccr {:.2e} purity {:.2e}", report.valid, report.defects.ccr, purity_defect(&vac)?);

    for beta in [0.5, 1.0, 2.0] {
        let th = thermal_covariances(&eps, beta)?;
        println!(
            "β = {beta}: valid {} purity {:.3e} kms {:.2e}",
            validate_state(&th).valid,
            purity_defect(&th)?,
            kms_defect(&th, &eps, beta)?
        );
    }

    // Cauchy data (f₀, f₁) built from Fourier modes
    let data = |k: i64| -> CVec {
        let m = fourier_mode(&grid, k);
        let mut v = CVec::zeros(2 * grid.n_points());
        v.rows_mut(0, grid.n_points()).copy_from(&m);
        v
    };
    let ys = [data(1), data(2)];
    let w4 = npoint_function(&vac, &ys, &ys)?;
    println!("ω(ψ*ψ*ψψ) on modes 1, 2: {w4:.6}");
    Ok(())
}
