//! Wick rotation in the ultrastatic case: Euclidean Green's functions,
//! Calderón projectors and the states they induce.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::WeightVector;
use crate::linalg::{self, c, CMat, C64, I};
use crate::opcalc::{SpectralDecomposition, WeightedOperator};
use crate::propagators;
use crate::states::{thermal_covariances, vacuum_projections, CovariancePair, ProjectionPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Dirichlet { t: f64 },
    Periodic { beta: f64 },
}

/// Projector pair on the boundary data. For periodic boundaries the layout
/// is `[f₀⁽⁰⁾, f₀⁽ᵝ/²⁾, f₁⁽⁰⁾, f₁⁽ᵝ/²⁾]` with weight `w ⊕ w`.
#[derive(Debug, Clone)]
pub struct CalderonPair {
    pub projections: ProjectionPair,
    pub boundary: Boundary,
}

impl CalderonPair {
    pub fn c_plus(&self) -> &CMat {
        &self.projections.c_plus
    }

    pub fn c_minus(&self) -> &CMat {
        &self.projections.c_minus
    }

    /// `λ± = ±q∘C±` on the boundary phase space.
    pub fn induced_covariances(&self) -> Result<CovariancePair> {
        let label = match self.boundary {
            Boundary::Free => "calderon(free)".to_string(),
            Boundary::Dirichlet { t } => format!("calderon(dirichlet, T={t})"),
            Boundary::Periodic { beta } => format!("calderon(periodic, β={beta})"),
        };
        self.projections.covariances(&label)
    }
}

fn spectrum(eps: &WeightedOperator) -> Result<SpectralDecomposition> {
    let spec = eps.spectral()?;
    if spec.eigenvalues()[0] <= 0.0 {
        return Err(Error::NotPositive {
            min_eigenvalue: spec.eigenvalues()[0],
        });
    }
    Ok(spec)
}

/// `G_E(s) = (2ε)⁻¹e^{−|s|ε}`.
pub fn euclidean_green(eps: &WeightedOperator, s: f64) -> Result<WeightedOperator> {
    propagators::euclidean(eps, s)
}

/// `max_t ‖i⁻¹G_E(it) − G_F(t)‖ / ‖G_F(t)‖` over the samples.
pub fn wick_continuation_defect(eps: &WeightedOperator, t_samples: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        let ge = propagators::euclidean_complex(eps, I * t)?;
        let gf = propagators::feynman(eps, t)?;
        let diff = ge.scale(-I).sub(&gf)?;
        worst = worst.max(diff.norm() / gf.norm());
    }
    Ok(worst)
}

/// `C±_∞ = ½[[1, ±ε⁻¹], [±ε, 1]]`.
pub fn calderon_free(eps: &WeightedOperator) -> Result<CalderonPair> {
    Ok(CalderonPair {
        projections: vacuum_projections(eps)?,
        boundary: Boundary::Free,
    })
}

/// `C±_T = ½[[1, ±ε⁻¹tanh(Tε)], [±ε coth(Tε), 1]]`.
pub fn calderon_dirichlet(eps: &WeightedOperator, t: f64) -> Result<CalderonPair> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("Dirichlet half-width must be positive, got {t}")));
    }
    let spec = spectrum(eps)?;
    let upper = spec.apply(|x| 0.5 * (t * x).tanh() / x, "½ε⁻¹tanh(Tε)")?.into_entries();
    let lower = spec.apply(|x| 0.5 * x / (t * x).tanh(), "½ε coth(Tε)")?.into_entries();
    let half = linalg::identity(eps.n()) * c(0.5);
    Ok(CalderonPair {
        projections: ProjectionPair {
            c_plus: linalg::block2(&half, &upper, &lower, &half),
            c_minus: linalg::block2(&half, &(-&upper), &(-&lower), &half),
            weight: eps.weight().clone(),
        },
        boundary: Boundary::Dirichlet { t },
    })
}

/// Sign of the component-swap term in the periodic projectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SwapSign {
    Plus,
    Minus,
}

/// `C±_β = ½[[1, ±ε_d⁻¹(coth + T csch)], [±ε_d(coth − T csch), 1]]` with
/// argument `βε_d/2`, `ε_d = ε ⊕ ε` and `T` the component swap.
pub fn calderon_periodic(eps: &WeightedOperator, beta: f64) -> Result<CalderonPair> {
    calderon_periodic_with(eps, beta, SwapSign::Plus)
}

pub fn calderon_periodic_with(eps: &WeightedOperator, beta: f64, sign: SwapSign) -> Result<CalderonPair> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let n = eps.n();
    let spec = spectrum(eps)?;
    let s = if sign == SwapSign::Plus { 1.0 } else { -1.0 };
    let half_arg = |x: f64| 0.5 * beta * x;
    let coth_over = spec.apply(|x| 0.5 / (half_arg(x).tanh() * x), "")?.into_entries();
    let csch_over = spec.apply(|x| 0.5 * s / (half_arg(x).sinh() * x), "")?.into_entries();
    let coth_times = spec.apply(|x| 0.5 * x / half_arg(x).tanh(), "")?.into_entries();
    let csch_times = spec.apply(|x| 0.5 * s * x / half_arg(x).sinh(), "")?.into_entries();
    let upper = linalg::block2(&coth_over, &csch_over, &csch_over, &coth_over);
    let lower = linalg::block2(&coth_times, &(-&csch_times), &(-&csch_times), &coth_times);
    let half = linalg::identity(2 * n) * c(0.5);
    let mut doubled = eps.weight().values().to_vec();
    doubled.extend_from_slice(eps.weight().values());
    let weight = WeightVector::new(doubled, eps.weight().time())?;
    Ok(CalderonPair {
        projections: ProjectionPair {
            c_plus: linalg::block2(&half, &upper, &lower, &half),
            c_minus: linalg::block2(&half, &(-&upper), &(-&lower), &half),
            weight,
        },
        boundary: Boundary::Periodic { beta },
    })
}

/// Indices of the first boundary component inside the doubled layout.
fn first_component(n: usize) -> Vec<usize> {
    (0..n).chain(2 * n..3 * n).collect()
}

fn select(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Restriction of the doubled state to the `s = 0` copy of `Σ`.
pub fn restrict_periodic_state(pair: &CalderonPair) -> Result<CovariancePair> {
    let Boundary::Periodic { beta } = pair.boundary else {
        return Err(Error::Identification("restriction needs a periodic Calderón pair".into()));
    };
    let cov = pair.induced_covariances()?;
    let n = cov.n() / 2;
    let idx = first_component(n);
    let w = WeightVector::new(cov.weight().values()[..n].to_vec(), cov.weight().time())?;
    CovariancePair::new(
        select(cov.lambda_plus(), &idx),
        select(cov.lambda_minus(), &idx),
        w,
        format!("restricted periodic(β={beta})"),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentificationReport {
    pub beta: f64,
    pub distance_plus: f64,
    pub distance_minus: f64,
    pub matching: Vec<SwapSign>,
}

/// Compares the restriction with the thermal pair for both signs of the
/// swap term.
pub fn periodic_identification(eps: &WeightedOperator, beta: f64, tol: f64) -> Result<IdentificationReport> {
    let thermal = thermal_covariances(eps, beta)?;
    let mut distances = [0.0; 2];
    let mut matching = Vec::new();
    for (k, sign) in [SwapSign::Plus, SwapSign::Minus].into_iter().enumerate() {
        let restricted = restrict_periodic_state(&calderon_periodic_with(eps, beta, sign)?)?;
        distances[k] = restricted.distance(&thermal)? / thermal.norm();
        if distances[k] <= tol {
            matching.push(sign);
        }
    }
    if matching.is_empty() {
        return Err(Error::Identification(format!(
            "no sign convention reproduces the thermal pair: relative distances {:.3e} (+T), {:.3e} (−T)",
            distances[0], distances[1]
        )));
    }
    Ok(IdentificationReport {
        beta,
        distance_plus: distances[0],
        distance_minus: distances[1],
        matching,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletLadder {
    pub horizons: Vec<f64>,
    pub distances: Vec<f64>,
    /// `−d ln‖C_T − C_∞‖ / dT` from a least-squares fit.
    pub fitted_rate: f64,
    pub eps_min: f64,
}

pub fn dirichlet_ladder(eps: &WeightedOperator, horizons: &[f64]) -> Result<DirichletLadder> {
    if horizons.len() < 2 {
        return Err(Error::InvalidParameter("a ladder needs at least two horizons".into()));
    }
    let free = calderon_free(eps)?.projections.frames().0;
    let distances = horizons
        .iter()
        .map(|&t| {
            let p = calderon_dirichlet(eps, t)?;
            Ok(linalg::op_norm(&(p.projections.frames().0 - &free)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let logs: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let (slope, _) = linalg::linear_fit(horizons, &logs);
    Ok(DirichletLadder {
        horizons: horizons.to_vec(),
        distances,
        fitted_rate: -slope,
        eps_min: spectrum(eps)?.eigenvalues()[0],
    })
}

/// Solves a symmetric tridiagonal system with constant off-diagonal `off`.
fn tridiagonal_solve(diag: &[f64], off: f64, rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for k in 1..m {
        let denom = diag[k] - off * cp[k - 1];
        cp[k] = off / denom;
        dp[k] = (rhs[k] - off * dp[k - 1]) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for k in (0..m - 1).rev() {
        x[k] = dp[k] - cp[k] * x[k + 1];
    }
    x
}

/// Scalar `C⁺ = −γ⁺K⁻¹γ*S` for `K = −∂_s² + x²` on a lattice of spacing `ds`
/// with Dirichlet ends far away; `γu = (u(0⁺), −∂_s u(0⁺))` by one-sided
/// differences and `S = [[0, −1], [1, 0]]`.
fn lattice_calderon_scalar(x: f64, ds: f64) -> [[f64; 2]; 2] {
    let half = ((40.0 / x) / ds).ceil() as usize;
    let m = 2 * half + 1;
    let diag = vec![2.0 / (ds * ds) + x * x; m];
    let off = -1.0 / (ds * ds);
    let mut out = [[0.0; 2]; 2];
    // columns: f = e₀ and f = e₁; S f = (−f₁, f₀)
    for (col, (g0, g1)) in [(0.0, 1.0), (-1.0, 0.0)].into_iter().enumerate() {
        let mut rhs = vec![0.0; m];
        rhs[half] += g0 / ds;
        rhs[half + 1] -= g1 / (2.0 * ds * ds);
        rhs[half - 1] += g1 / (2.0 * ds * ds);
        let u = tridiagonal_solve(&diag, off, &rhs);
        let (u1, u2, u3) = (u[half + 1], u[half + 2], u[half + 3]);
        let trace = 3.0 * u1 - 3.0 * u2 + u3;
        let normal = -(-5.0 * u1 + 8.0 * u2 - 3.0 * u3) / (2.0 * ds);
        out[0][col] = -trace;
        out[1][col] = -normal;
    }
    out
}

/// Free Calderón projector assembled from the lattice resolvent, mode by
/// mode in the eigenbasis of `ε`. Agrees with `calderon_free` to `O(Δs)`.
pub fn calderon_free_from_resolvent(eps: &WeightedOperator, ds: f64) -> Result<CalderonPair> {
    if !(ds > 0.0) {
        return Err(Error::InvalidParameter(format!("lattice spacing must be positive, got {ds}")));
    }
    let spec = spectrum(eps)?;
    let blocks: Vec<[[f64; 2]; 2]> = spec.eigenvalues().iter().map(|&x| lattice_calderon_scalar(x, ds)).collect();
    let assemble = |i: usize, j: usize| {
        let vals: Vec<C64> = blocks.iter().map(|b| c(b[i][j])).collect();
        let v = spec.eigenvectors();
        let w = eps.weight().values();
        linalg::scale_cols(v, &vals.iter().map(|z| z.re).collect::<Vec<_>>()) * linalg::scale_cols(&v.adjoint(), w)
    };
    let c_plus = linalg::block2(&assemble(0, 0), &assemble(0, 1), &assemble(1, 0), &assemble(1, 1));
    let c_minus = linalg::identity(2 * eps.n()) - &c_plus;
    Ok(CalderonPair {
        projections: ProjectionPair {
            c_plus,
            c_minus,
            weight: eps.weight().clone(),
        },
        boundary: Boundary::Free,
    })
}
