//! Static propagator kernels, the Feynman identity and the discrete delta
//! weight of the Feynman kernel.

use qfc::calderon::wick_continuation_defect;
use qfc::grid::{build_grid, MetricProfile};
use qfc::opcalc::{build_spatial_operator, sqrt_positive};
use qfc::propagators::{discrete_pde_residual, symmetric_grid, verify_feynman_identity, KernelFamily, KernelKind};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let grid = build_grid(16, 2.0 * PI)?;
    let eps = sqrt_positive(&build_spatial_operator(&MetricProfile::flat(1.0)?, &grid, 0.0)?)?;
    let samples: Vec<f64> = (0..20).map(|k| -1.9 + 0.2 * k as f64).collect();
    println!("Feynman identity defect {:.2e}", verify_feynman_identity(&eps, &samples)?);
    println!("Wick continuation defect {:.2e}", wick_continuation_defect(&eps, &samples)?);

    let fam = KernelFamily::new(&eps, KernelKind::Feynman)?;
    let t_grid = symmetric_grid(1.0, 1e-3);
    for kind in KernelKind::ALL {
        let r = discrete_pde_residual(&fam.with_kind(kind), &t_grid)?;
        println!("{:<16} delta weight {:+.6}  off-origin residual {:.2e}", kind.name(), r.delta_weight, r.off_origin);
    }
    Ok(())
}
