//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Exits 0 after printing every line so that `cargo test` reports the run;
//! set `QFC_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use qfc::calderon::{calderon_dirichlet, dirichlet_ladder, periodic_identification, restrict_periodic_state, calderon_periodic, wick_continuation_defect};
use qfc::conformal::{diagram_defect, transform_cauchy_covariances, ConformalFactor};
use qfc::evolution::{evolve, scatter_ladder, Scenario, Side};
use qfc::grid::{build_grid, fourier_mode, MetricProfile, WeightVector};
use qfc::hadamard::{
    factorization_residual, hadamard_covariances, microlocal_splitting, mode_decay, riccati_iterate, uniform_t_grid,
};
use qfc::linalg::{c, op_norm, CMat, CVec, C64, I};
use qfc::opcalc::{build_spatial_operator, sqrt_positive, WeightedOperator};
use qfc::propagators::{discrete_pde_residual, symmetric_grid, verify_feynman_identity, KernelFamily, KernelKind};
use qfc::states::{
    npoint_function, pairing, purity_defect, thermal_covariances, vacuum_covariances, vacuum_projections,
    validate_state,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn flat_eps(n: usize, m2: f64) -> WeightedOperator {
    let grid = build_grid(n, 2.0 * PI).unwrap();
    sqrt_positive(&build_spatial_operator(&MetricProfile::flat(m2).unwrap(), &grid, 0.0).unwrap()).unwrap()
}

fn random_eps(rng: &mut ChaCha8Rng, n: usize) -> WeightedOperator {
    let g = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let frame = g.adjoint() * &g + CMat::identity(n, n) * c(rng.gen_range(0.05..2.0));
    let w = WeightVector::new((0..n).map(|_| rng.gen_range(0.1..3.0)).collect(), 0.0).unwrap();
    WeightedOperator::from_frame(&frame, w, "ε").unwrap()
}

fn ccr() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = 2 + (k * 31) % 63;
        let eps = random_eps(&mut rng, n);
        let beta = rng.gen_range(0.1..5.0);
        // the charge form is a unitary swap in orthonormal frames, so ‖q‖ = 1
        for cov in [vacuum_covariances(&eps).unwrap(), thermal_covariances(&eps, beta).unwrap()] {
            worst = worst.max(cov.ccr_defect());
        }
    }
    (worst <= 1e-10, format!("worst relative defect {worst:.2e} over 50 random ε"))
}

fn riccati_bump_32() -> (Scenario, qfc::hadamard::RiccatiSolution) {
    let sc = Scenario::new(
        MetricProfile::gaussian_bump(0.2, 2.0, 1.0, 4.0).unwrap(),
        build_grid(32, 2.0 * PI).unwrap(),
        -2.5,
        2.5,
        None,
    )
    .unwrap();
    let sol = riccati_iterate(&sc, &uniform_t_grid(-2.0, 2.0, 0.04), 8, 1e-14).unwrap();
    (sc, sol)
}

fn purity(bump: &(Scenario, qfc::hadamard::RiccatiSolution)) -> Outcome {
    let eps = flat_eps(32, 1.0);
    let vac = purity_defect(&vacuum_covariances(&eps).unwrap()).unwrap();
    let dir = purity_defect(&calderon_dirichlet(&eps, 2.0).unwrap().induced_covariances().unwrap()).unwrap();
    let split = microlocal_splitting(&bump.1, 0.0).unwrap();
    let ric = purity_defect(&hadamard_covariances(&split).unwrap()).unwrap();
    let thermal: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&b| purity_defect(&thermal_covariances(&eps, b).unwrap()).unwrap())
        .collect();
    let pure = vac.max(dir).max(ric);
    let mixed = thermal.iter().cloned().fold(f64::INFINITY, f64::min);
    (
        pure <= 1e-9 && mixed >= 1e-2,
        format!("vacuum {vac:.1e}, Dirichlet {dir:.1e}, Riccati {ric:.1e}; thermal min {mixed:.3e}"),
    )
}

fn static_splitting() -> Outcome {
    let sc = Scenario::new(MetricProfile::flat(1.0).unwrap(), build_grid(16, 2.0 * PI).unwrap(), -1.0, 1.0, None).unwrap();
    let sol = riccati_iterate(&sc, &uniform_t_grid(-0.2, 0.2, 0.05), 3, 1e-12).unwrap();
    let split = microlocal_splitting(&sol, 0.0).unwrap();
    let vac = vacuum_projections(&sc.eps(0.0).unwrap()).unwrap();
    let (p, m) = split.projections.frames();
    let (vp, vm) = vac.frames();
    let entry = |a: &CMat, b: &CMat| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d = entry(&p, &vp).max(entry(&m, &vm));
    (d <= 1e-10, format!("max entrywise difference {d:.2e}"))
}

fn riccati(bump: &(Scenario, qfc::hadamard::RiccatiSolution)) -> Outcome {
    let sc = Scenario::new(MetricProfile::flat(1.0).unwrap(), build_grid(16, 2.0 * PI).unwrap(), -1.0, 1.0, None).unwrap();
    let static_res = riccati_iterate(&sc, &uniform_t_grid(-0.5, 0.5, 0.05), 3, 1e-14).unwrap().residual();

    // one mode: a = 1, r = 2κ, against a dense RK4 of iḃ = b² − a − irb
    let kappa = 0.1;
    let sc1 = Scenario::new(
        MetricProfile::exponential(2.0 * kappa, 1.0).unwrap(),
        build_grid(4, 2.0 * PI).unwrap(),
        -1.5,
        1.5,
        None,
    )
    .unwrap();
    let grid = uniform_t_grid(-1.0, 1.0, 0.02);
    let sol = riccati_iterate(&sc1, &grid, 8, 1e-14).unwrap();
    let v = fourier_mode(sc1.grid(), 0);
    let scalar: Vec<C64> = sol.b.iter().map(|b| (v.adjoint() * b.entries() * &v)[(0, 0)] / v.norm_squared()).collect();
    let rhs = |b: C64| -I * (b * b - 1.0 - I * 2.0 * kappa * b);
    let mut b = scalar[0];
    let mut ode: f64 = 0.0;
    for k in 1..grid.len() {
        let h = (grid[k] - grid[k - 1]) / 200.0;
        for _ in 0..200 {
            let k1 = rhs(b);
            let k2 = rhs(b + k1 * (0.5 * h));
            let k3 = rhs(b + k2 * (0.5 * h));
            let k4 = rhs(b + k3 * h);
            b += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        ode = ode.max((b - scalar[k]).norm());
    }

    let (sc2, sol2) = bump;
    let fact = factorization_residual(sol2, sc2).unwrap().max();
    let bound = 10.0 * sol2.residual() + sol2.dt * sol2.dt;
    (
        static_res <= 1e-12 && ode <= 1e-6 && fact <= bound,
        format!("static {static_res:.1e}, one-mode ODE {ode:.1e}, factorization {fact:.2e} ≤ {bound:.2e}"),
    )
}

fn evolution() -> Outcome {
    let sc = Scenario::new(
        MetricProfile::gaussian_bump(0.3, 1.0, 1.0, 1.0).unwrap(),
        build_grid(16, 2.0 * PI).unwrap(),
        -1.0,
        1.0,
        None,
    )
    .unwrap();
    let u = evolve(&sc, -0.5, 0.5).unwrap();
    let sympl = u.symplecticity_defect();
    let a = evolve(&sc, -0.5, 0.1).unwrap();
    let b = evolve(&sc, 0.1, 0.5).unwrap();
    let cocycle = op_norm(&(b.after(&a).unwrap().frame() - u.frame()));

    let base = sc.steps_per_unit() / 4;
    let at = |s: usize| evolve(&sc.with_steps_per_unit(s).unwrap(), -0.5, 0.5).unwrap().frame();
    let reference = at(base * 16);
    let e1 = op_norm(&(at(base) - &reference));
    let e2 = op_norm(&(at(base * 2) - &reference));
    let order = (e1 / e2).log2();
    (
        sympl <= 1e-8 && cocycle <= 1e-7 && (order - 4.0).abs() <= 0.3,
        format!("symplecticity {sympl:.1e}, cocycle {cocycle:.1e}, order {order:.2}"),
    )
}

fn feynman() -> Outcome {
    let eps = flat_eps(16, 1.0);
    let samples: Vec<f64> = (0..20).map(|k| -1.9 + 0.2 * k as f64).collect();
    let identity = verify_feynman_identity(&eps, &samples).unwrap();
    let wick = wick_continuation_defect(&eps, &samples).unwrap();
    let fam = KernelFamily::new(&eps, KernelKind::Feynman).unwrap();
    let pde = discrete_pde_residual(&fam, &symmetric_grid(1.0, 1e-3)).unwrap();
    let dw = (pde.delta_weight - 1.0).abs();
    (
        identity <= 1e-12 && wick <= 1e-12 && dw <= 1e-3,
        format!("identity {identity:.1e}, Wick {wick:.1e}, delta weight error {dw:.1e}"),
    )
}

fn calderon() -> Outcome {
    let e = 1.3;
    let w = WeightVector::new(vec![1.0], 0.0).unwrap();
    let eps = WeightedOperator::diagonal(&[e], w.clone(), "ε").unwrap();
    let horizons: Vec<f64> = (0..7).map(|k| 1.0 + 0.5 * k as f64).collect();
    let ladder = dirichlet_ladder(&eps, &horizons).unwrap();
    let oracle = horizons
        .iter()
        .map(|t| {
            let th = (t * e).tanh();
            0.5 * ((1.0 - th) / e).max(e * (1.0 / th - 1.0))
        })
        .zip(&ladder.distances)
        .map(|(o, d)| ((o - d) / o).abs())
        .fold(0.0, f64::max);
    let rate_err = (ladder.fitted_rate - 2.0 * e).abs() / (2.0 * e);

    let beta = 3f64.ln();
    let unit = WeightedOperator::diagonal(&[1.0], w, "ε").unwrap();
    let restricted = restrict_periodic_state(&calderon_periodic(&unit, beta).unwrap()).unwrap();
    let spot = (restricted.lambda_plus()[(0, 0)] - 1.0).norm();
    let ident = periodic_identification(&flat_eps(16, 1.0), beta, f64::INFINITY).unwrap();
    let restriction = ident.distance_plus.max(ident.distance_minus);
    (
        rate_err <= 0.1 && oracle <= 1e-10 && restriction <= 1e-9 && spot <= 1e-12,
        format!(
            "rate {:.4} vs 2ε {:.4} ({:.1}%), oracle {oracle:.1e}, restriction {restriction:.1e}, spot {spot:.1e}",
            ladder.fitted_rate,
            2.0 * e,
            100.0 * rate_err
        ),
    )
}

fn scattering() -> Outcome {
    let sc = Scenario::new(
        MetricProfile::powerlaw_relax(1.0, 0.5, 2.0, 1.0).unwrap(),
        build_grid(16, 2.0 * PI).unwrap(),
        -1.0,
        33.0,
        Some(400),
    )
    .unwrap();
    let horizons: Vec<f64> = (2..=16).map(|k| 2.0 * k as f64).collect();
    let l = scatter_ladder(&sc, &horizons, Side::Out, 1e-3).unwrap();
    let target = 1.0 - l.decay_exponent;
    let rate_ok = ((l.fitted_rate - target) / target).abs() <= 0.3;
    let cross = l.wave_crosscheck.unwrap_or(f64::NAN);
    (
        rate_ok && l.final_report.valid && l.final_purity <= 1e-6 && cross <= 1e-8,
        format!(
            "rate {:.3} vs {target} ± 30%, valid {}, purity {:.1e}, wave cross-check {cross:.1e}",
            l.fitted_rate, l.final_report.valid, l.final_purity
        ),
    )
}

fn npoint() -> Outcome {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cov = thermal_covariances(&random_eps(&mut rng, 5), 0.7).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let mut v = || CVec::from_fn(10, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let ys: Vec<CVec> = (0..n).map(|_| v()).collect();
        let yp: Vec<CVec> = (0..n).map(|_| v()).collect();
        let brute: C64 = perms(n)
            .iter()
            .map(|p| (0..n).map(|i| pairing(&cov, &ys[i], &yp[p[i]]).unwrap()).product::<C64>())
            .sum();
        let got = npoint_function(&cov, &ys, &yp).unwrap();
        worst = worst.max((got - brute).norm() / brute.norm());
    }
    (worst <= 1e-12, format!("worst relative difference {worst:.1e}"))
}

fn mode_decay_proxy() -> Outcome {
    let sc = Scenario::new(
        MetricProfile::gaussian_bump(0.2, 2.0, 4.0, 4.0).unwrap(),
        build_grid(64, 2.0 * PI).unwrap(),
        -1.0,
        2.0,
        None,
    )
    .unwrap();
    let base = 0.8;
    let sol = riccati_iterate(&sc, &uniform_t_grid(0.4, 1.2, 0.04), 10, 1e-14).unwrap();
    let split = microlocal_splitting(&sol, base).unwrap();
    let i = sol.index_of(base).unwrap();
    let d = mode_decay(&split.projections.c_plus, &sol.reference_eps[i], (8, 24)).unwrap();
    (d.exponent >= 2.0, format!("fitted exponent {:.2} on 8 < |k| ≤ 24", d.exponent))
}

fn conformal() -> Outcome {
    let grid = build_grid(16, 2.0 * PI).unwrap();
    let vac = vacuum_covariances(&flat_eps(16, 1.0)).unwrap();
    let cv = ConformalFactor::constant(2.0).at_nodes(&grid, 0.0).unwrap();
    let t = transform_cauchy_covariances(&vac, &cv).unwrap();
    let valid = validate_state(&t).valid;
    let dp = (purity_defect(&t).unwrap() - purity_defect(&vac).unwrap()).abs();
    let diagram = diagram_defect(vac.weight(), &cv).unwrap();
    (
        valid && dp <= 1e-10 && diagram <= 1e-12,
        format!("valid {valid}, purity change {dp:.1e}, diagram {diagram:.1e}"),
    )
}

fn main() {
    let start = Instant::now();
    let bump = riccati_bump_32();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("CCR identity", Box::new(ccr)),
        ("purity dichotomy", Box::new(|| purity(&bump))),
        ("static splitting", Box::new(static_splitting)),
        ("Riccati", Box::new(|| riccati(&bump))),
        ("symplecticity and cocycle", Box::new(evolution)),
        ("Feynman algebra", Box::new(feynman)),
        ("Calderon limits", Box::new(calderon)),
        ("scattering ladder", Box::new(scattering)),
        ("n-point oracle", Box::new(npoint)),
        ("mode-decay proxy", Box::new(mode_decay_proxy)),
        ("conformal", Box::new(conformal)),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {} {name}: {detail}", k + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 && std::env::var("QFC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
