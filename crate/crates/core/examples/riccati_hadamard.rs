//! Riccati iteration on a slow bump, the microlocal splitting it induces and
//! the high-mode comparison with the instantaneous frequency splitting.

use qfc::evolution::Scenario;
use qfc::grid::{build_grid, MetricProfile};
use qfc::hadamard::{
    factorization_residual, hadamard_covariances, microlocal_splitting, mode_decay, riccati_iterate, uniform_t_grid,
};
use qfc::states::{purity_defect, validate_state};
use std::f64::consts::PI;

fn main() -> qfc::Result<()> {
    let profile = MetricProfile::gaussian_bump(0.2, 2.0, 4.0, 4.0)?;
    let scenario = Scenario::new(profile, build_grid(32, 2.0 * PI)?, -1.0, 2.0, None)?;
    let base = 0.8;
    let sol = riccati_iterate(&scenario, &uniform_t_grid(0.4, 1.2, 0.04), 10, 1e-14)?;
    let history: Vec<String> = sol.residual_history.iter().map(|r| format!("{r:.2e}")).collect();
    println!("residual history: {}", history.join(" "));
    println!("kept iterate {} with residual {:.2e}", sol.best_iteration, sol.residual());
    println!("factorization residual {:.2e}", factorization_residual(&sol, &scenario)?.max());

    let split = microlocal_splitting(&sol, base)?;
    let cov = hadamard_covariances(&split)?;
    println!("splitting state: valid {} purity {:.2e}", validate_state(&cov).valid, purity_defect(&cov)?);

    let i = sol.index_of(base)?;
    let decay = mode_decay(&split.projections.c_plus, &sol.reference_eps[i], (4, 12))?;
    for (k, v) in decay.wavenumbers.iter().zip(&decay.values) {
        println!("|k| = {k:>2}: {v:.3e}");
    }
    println!("fitted exponent {:.2}", decay.exponent);
    Ok(())
}
