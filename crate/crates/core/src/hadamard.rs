//! Pure Hadamard states from the Riccati factorization
//! `∂_t² + r∂_t + a = (∂_t + ib + r)(∂_t − ib)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{evolve, static_evolution, Scenario};
use crate::grid::WeightVector;
use crate::linalg::{self, c, CMat, CVec, C64, I};
use crate::opcalc::{sqrt_positive, WeightedOperator};
use crate::propagators::uniform_grid_origin;
use crate::states::{doubled_frame, from_doubled_frame, CovariancePair, ProjectionPair};

/// Samples of `a(t)`, `ε(t)`, `r(t)` and the weight on a uniform t-grid.
#[derive(Debug, Clone)]
struct Samples {
    a: Vec<CMat>,
    eps: Vec<CMat>,
    eps_inv: Vec<CMat>,
    r: Vec<Vec<f64>>,
    weights: Vec<WeightVector>,
    a_scale: f64,
}

impl Samples {
    fn collect(scenario: &Scenario, t_grid: &[f64]) -> Result<Self> {
        let mut s = Samples {
            a: Vec::new(),
            eps: Vec::new(),
            eps_inv: Vec::new(),
            r: Vec::new(),
            weights: Vec::new(),
            a_scale: 0.0,
        };
        for &t in t_grid {
            let a = scenario.operator(t)?;
            let spec = a.spectral()?;
            if spec.eigenvalues()[0] <= 0.0 {
                return Err(Error::NotPositive {
                    min_eigenvalue: spec.eigenvalues()[0],
                });
            }
            s.a_scale = s.a_scale.max(a.norm());
            s.eps.push(spec.apply(f64::sqrt, "ε")?.into_entries());
            s.eps_inv.push(spec.apply(|x| 1.0 / x.sqrt(), "ε⁻¹")?.into_entries());
            s.r.push(scenario.rate(t)?);
            s.weights.push(a.weight().clone());
            s.a.push(a.into_entries());
        }
        Ok(s)
    }
}

/// Time derivative on a uniform grid: central differences inside,
/// second-order one-sided differences at the ends.
fn time_derivative(f: &[CMat], dt: f64) -> Vec<CMat> {
    let m = f.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (&f[1] * c(4.0) - &f[0] * c(3.0) - &f[2]) * c(0.5 / dt)
            } else if i == m - 1 {
                (&f[m - 1] * c(3.0) - &f[m - 2] * c(4.0) + &f[m - 3]) * c(0.5 / dt)
            } else {
                (&f[i + 1] - &f[i - 1]) * c(0.5 / dt)
            }
        })
        .collect()
}

fn rate_times(r: &[f64], m: &CMat) -> CMat {
    linalg::scale_rows(m, r)
}

/// `i∂_t b − b² + a + i r b` at every grid point.
fn riccati_defects(b: &[CMat], s: &Samples, dt: f64) -> Vec<CMat> {
    let db = time_derivative(b, dt);
    (0..b.len())
        .map(|i| &db[i] * I - &b[i] * &b[i] + &s.a[i] + rate_times(&s.r[i], &b[i]) * I)
        .collect()
}

/// Sup of the frame norm over `range`, relative to `max_t ‖a(t)‖`.
fn window_residual(defects: &[CMat], s: &Samples, range: std::ops::Range<usize>) -> f64 {
    range
        .map(|i| linalg::op_norm(&linalg::similarity(&defects[i], &s.weights[i].sqrt())))
        .fold(0.0, f64::max)
        / s.a_scale
}

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub t_grid: Vec<f64>,
    pub dt: f64,
    /// `b(t)` as coordinate matrices, one per grid point.
    pub b: Vec<WeightedOperator>,
    pub reference_eps: Vec<WeightedOperator>,
    /// Residual of `b = ε` first, then of each iterate.
    pub residual_history: Vec<f64>,
    /// Index into `residual_history` of the returned iterate.
    pub best_iteration: usize,
    /// `min_t λ_min(ε^{-1/2}(b + b†)ε^{-1/2})`.
    pub positivity_constant: f64,
}

impl RiccatiSolution {
    pub fn residual(&self) -> f64 {
        self.residual_history[self.best_iteration]
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.t_grid
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * self.dt)
            .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not a node of the Riccati grid")))
    }

    /// `b⁻ = −b†` at grid index `i`.
    pub fn b_minus(&self, i: usize) -> WeightedOperator {
        crate::opcalc::weighted_adjoint(&self.b[i]).scale(c(-1.0))
    }
}

/// Fixed-point iteration `d ← d₀ + F(d)` for `b = ε + d`.
///
/// The one-sided end stencils seed errors that move inward by one node per
/// iteration, so the iteration runs on the requested grid padded by up to
/// `k_max + 2` nodes per side (as far as the scenario window allows).
pub fn riccati_iterate(scenario: &Scenario, t_grid: &[f64], k_max: usize, tol: f64) -> Result<RiccatiSolution> {
    if t_grid.len() < 5 {
        return Err(Error::CoarseTimeGrid("Riccati iteration needs at least five t samples".into()));
    }
    let dt = uniform_spacing(t_grid)?;
    let m = t_grid.len();
    let room = |gap: f64| ((gap / dt + 1e-9).floor().max(0.0) as usize).min(k_max + 2);
    let lo = room(t_grid[0] - scenario.t_min());
    let hi = room(scenario.t_max() - t_grid[m - 1]);
    let padded: Vec<f64> = (0..lo + m + hi)
        .map(|k| t_grid[0] + (k as f64 - lo as f64) * dt)
        .collect();
    let total = padded.len();
    let s = Samples::collect(scenario, &padded)?;
    let window = lo.max(1)..(lo + m).min(total - 1);

    let deps = time_derivative(&s.eps, dt);
    let d0: Vec<CMat> = (0..total)
        .map(|i| (&s.eps_inv[i] * (&deps[i] + rate_times(&s.r[i], &s.eps[i]))) * (I * 0.5))
        .collect();

    let b_eps: Vec<CMat> = s.eps.clone();
    let mut history = vec![window_residual(&riccati_defects(&b_eps, &s, dt), &s, window.clone())];
    let mut best = (history[0], 0usize, b_eps);
    let mut d: Vec<CMat> = vec![CMat::zeros(scenario.n(), scenario.n()); total];
    let mut iteration = 0;
    while best.0 > tol && iteration < k_max {
        iteration += 1;
        let dd = time_derivative(&d, dt);
        d = (0..total)
            .map(|i| {
                let comm = &s.eps[i] * &d[i] - &d[i] * &s.eps[i];
                let inner = &dd[i] * I + comm + rate_times(&s.r[i], &d[i]) * I - &d[i] * &d[i];
                &d0[i] + &s.eps_inv[i] * inner * c(0.5)
            })
            .collect();
        let b: Vec<CMat> = (0..total).map(|i| &s.eps[i] + &d[i]).collect();
        let res = window_residual(&riccati_defects(&b, &s, dt), &s, window.clone());
        let previous = *history.last().unwrap();
        history.push(res);
        if res < best.0 {
            best = (res, iteration, b);
        }
        if !res.is_finite() || res > 0.9 * previous {
            break;
        }
    }
    let (_, best_iteration, b) = best;

    let mut positivity_constant = f64::INFINITY;
    let mut b_ops = Vec::with_capacity(m);
    let mut eps_ops = Vec::with_capacity(m);
    for (i, &t) in t_grid.iter().enumerate() {
        let w = s.weights[lo + i].clone();
        let b_op = WeightedOperator::new(b[lo + i].clone(), w.clone(), format!("b({t})"))?;
        let eps_op = WeightedOperator::new(s.eps[lo + i].clone(), w.clone(), format!("ε({t})"))?;
        let half = sqrt_positive(&eps_op)?.inverse()?;
        let sum = b_op.frame() + b_op.frame().adjoint();
        let h = half.frame() * sum * half.frame();
        positivity_constant = positivity_constant.min(linalg::min_eigenvalue(&h));
        b_ops.push(b_op);
        eps_ops.push(eps_op);
    }
    if !(positivity_constant > 0.0) {
        return Err(Error::SplittingDegenerate {
            min_eigenvalue: positivity_constant,
        });
    }
    Ok(RiccatiSolution {
        t_grid: t_grid.to_vec(),
        dt,
        b: b_ops,
        reference_eps: eps_ops,
        residual_history: history,
        best_iteration,
        positivity_constant,
    })
}

fn uniform_spacing(t_grid: &[f64]) -> Result<f64> {
    let m = t_grid.len();
    let dt = (t_grid[m - 1] - t_grid[0]) / (m - 1) as f64;
    if !(dt > 0.0) || t_grid.windows(2).any(|p| ((p[1] - p[0]) - dt).abs() > 1e-9 * dt) {
        return Err(Error::CoarseTimeGrid("t grid must be uniform and increasing".into()));
    }
    Ok(dt)
}

pub fn uniform_t_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let m = ((t1 - t0) / dt).round() as usize;
    (0..=m).map(|k| t0 + (t1 - t0) * k as f64 / m as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub plus: f64,
    pub minus: f64,
}

impl FactorizationReport {
    pub fn max(&self) -> f64 {
        self.plus.max(self.minus)
    }
}

/// Compares `(∂_t + ib + r)(∂_t − ib)φ` with `Pφ` on test evolutions
/// `φ = g(t)v`. The outer `∂_t` acts by finite differences on samples of
/// `(∂_t − ib)φ`; `Pφ` uses exact derivatives of `g`.
pub fn factorization_residual(sol: &RiccatiSolution, scenario: &Scenario) -> Result<FactorizationReport> {
    let m = sol.t_grid.len();
    let n = scenario.n();
    let t_mid = 0.5 * (sol.t_grid[0] + sol.t_grid[m - 1]);
    let width = 0.5 * (sol.t_grid[m - 1] - sol.t_grid[0]);
    let g = |t: f64| {
        let u = (t - t_mid) / width;
        ((0.3 + u).cos(), -(0.3 + u).sin() / width, -(0.3 + u).cos() / (width * width))
    };
    let vectors: Vec<CVec> = [0i64, 1, 3]
        .iter()
        .map(|&k| crate::grid::fourier_mode(scenario.grid(), k))
        .chain(std::iter::once(CVec::from_fn(n, |j, _| C64::new((0.7 * j as f64).sin(), (0.3 * j as f64).cos()))))
        .collect();
    let a_scale = (0..m)
        .map(|i| scenario.operator(sol.t_grid[i]).map(|a| a.norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut report = FactorizationReport { plus: 0.0, minus: 0.0 };
    for sign in [1.0, -1.0] {
        let bs: Vec<CMat> = (0..m)
            .map(|i| if sign > 0.0 { sol.b[i].entries().clone() } else { sol.b_minus(i).into_entries() })
            .collect();
        let mut worst: f64 = 0.0;
        for v in &vectors {
            let psi: Vec<CVec> = (0..m)
                .map(|i| {
                    let (g0, g1, _) = g(sol.t_grid[i]);
                    v * c(g1) - (&bs[i] * v) * (I * g0)
                })
                .collect();
            for i in 1..m - 1 {
                let t = sol.t_grid[i];
                let (g0, g1, g2) = g(t);
                let a = scenario.operator(t)?;
                let r = scenario.rate(t)?;
                let dpsi = (&psi[i + 1] - &psi[i - 1]) * c(0.5 / sol.dt);
                let factored = dpsi + (&bs[i] * &psi[i]) * I + CVec::from_fn(n, |j, _| psi[i][j] * r[j]);
                let direct = v * c(g2) + CVec::from_fn(n, |j, _| v[j] * (r[j] * g1)) + (a.entries() * v) * c(g0);
                let w = a.weight().sqrt();
                let diff = factored - direct;
                let err = diff.iter().zip(&w).map(|(z, s)| (z * *s).norm_sqr()).sum::<f64>().sqrt();
                let vn = v.iter().zip(&w).map(|(z, s)| (z * *s).norm_sqr()).sum::<f64>().sqrt();
                worst = worst.max(err / (vn * a_scale));
            }
        }
        if sign > 0.0 {
            report.plus = worst;
        } else {
            report.minus = worst;
        }
    }
    Ok(report)
}

/// Projection pair `c± = Tπ±T⁻¹` and the congruence `T`.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub t: CMat,
    pub t_inverse: CMat,
    pub projections: ProjectionPair,
    pub base_time: f64,
    /// `b⁺ = b` at the base time, in the frame.
    pub b_plus_frame: CMat,
}

impl Splitting {
    /// `‖T T⁻¹ − 1‖`.
    pub fn inverse_defect(&self) -> f64 {
        let n2 = self.t.nrows();
        linalg::op_norm(&(&self.t * &self.t_inverse - linalg::identity(n2)))
    }

    /// `‖T* q T − diag(1, −1)‖`, in frames.
    pub fn congruence_defect(&self) -> f64 {
        let n = self.t.nrows() / 2;
        let tf = doubled_frame(&self.t, &self.projections.weight);
        let q = linalg::swap_blocks(n);
        let target = linalg::block_diag(&linalg::identity(n), &(-linalg::identity(n)));
        linalg::op_norm(&(tf.adjoint() * q * &tf - target))
    }
}

pub fn microlocal_splitting(sol: &RiccatiSolution, base_time: f64) -> Result<Splitting> {
    let i = sol.index_of(base_time)?;
    splitting_from_b(&sol.b[i], base_time)
}

/// Splitting built from a single `b` with `b + b† ≻ 0`.
pub fn splitting_from_b(b: &WeightedOperator, base_time: f64) -> Result<Splitting> {
    let n = b.n();
    let w = b.weight().clone();
    let bp = b.frame();
    let bm = -bp.adjoint();
    let d = &bp - &bm;
    let (vals, vecs) = linalg::hermitian_eigen(&d);
    if !(vals[0] > 0.0) {
        return Err(Error::SplittingDegenerate { min_eigenvalue: vals[0] });
    }
    let f = |g: &dyn Fn(f64) -> f64| {
        let s: Vec<f64> = vals.iter().map(|&x| g(x)).collect();
        linalg::scale_cols(&vecs, &s) * vecs.adjoint()
    };
    let d_inv = f(&|x| 1.0 / x);
    let d_mhalf = f(&|x| 1.0 / x.sqrt());

    let c_plus = linalg::block2(&(-(&d_inv * &bm)), &d_inv, &(-(&bp * &d_inv * &bm)), &(&bp * &d_inv));
    let c_minus = linalg::identity(2 * n) - &c_plus;
    let t = linalg::block2(&d_mhalf, &(-&d_mhalf), &(&bp * &d_mhalf), &(-(&bm * &d_mhalf)));
    let t_inv = linalg::block2(&(-(&d_mhalf * &bm)), &d_mhalf, &(-(&d_mhalf * &bp)), &d_mhalf);
    Ok(Splitting {
        t: from_doubled_frame(&t, &w),
        t_inverse: from_doubled_frame(&t_inv, &w),
        projections: ProjectionPair {
            c_plus: from_doubled_frame(&c_plus, &w),
            c_minus: from_doubled_frame(&c_minus, &w),
            weight: w,
        },
        base_time,
        b_plus_frame: bp,
    })
}

/// `λ± = ±q∘c±`.
pub fn hadamard_covariances(split: &Splitting) -> Result<CovariancePair> {
    split
        .projections
        .covariances(&format!("hadamard(t={})", split.base_time))
}

/// Lagrange interpolation of grid samples with four nodes.
fn interpolate(samples: &[CMat], grid: &[f64], t: f64) -> CMat {
    let m = grid.len();
    let dt = grid[1] - grid[0];
    let pos = ((t - grid[0]) / dt).floor() as isize;
    let start = (pos - 1).clamp(0, m as isize - 4) as usize;
    let mut out = CMat::zeros(samples[0].nrows(), samples[0].ncols());
    for k in start..start + 4 {
        let mut l = 1.0;
        for j in start..start + 4 {
            if j != k {
                l *= (t - grid[j]) / (grid[k] - grid[j]);
            }
        }
        out += &samples[k] * c(l);
    }
    out
}

/// `Ũ₀f(t) = 𝒰⁺(t)u⁺f + 𝒰⁻(t)u⁻f` with `u± = D⁻¹(∓b∓f₀ ± f₁)` at the base
/// time and `𝒰±` generated by `i b±`.
pub fn cauchy_parametrix(sol: &RiccatiSolution, base_time: f64, f: &CVec, t: f64) -> Result<CVec> {
    let i0 = sol.index_of(base_time)?;
    let n = sol.b[0].n();
    if f.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: f.len(),
        });
    }
    let lo = sol.t_grid[0];
    let hi = sol.t_grid[sol.t_grid.len() - 1];
    if t < lo - 1e-12 || t > hi + 1e-12 {
        return Err(Error::OutOfWindow { t, t_min: lo, t_max: hi });
    }
    let bp: Vec<CMat> = sol.b.iter().map(|b| b.entries().clone()).collect();
    let bm: Vec<CMat> = (0..bp.len()).map(|i| sol.b_minus(i).into_entries()).collect();
    let d = &bp[i0] - &bm[i0];
    let dinv = linalg::inverse(&d, "b⁺ − b⁻")?;
    let f0 = f.rows(0, n).into_owned();
    let f1 = f.rows(n, n).into_owned();
    let u_plus = &dinv * (&f1 - &bm[i0] * &f0);
    let u_minus = &dinv * (&bp[i0] * &f0 - &f1);

    let eps_top = sol.reference_eps.iter().map(|e| e.max_eigenvalue()).fold(0.0, f64::max);
    let per_unit = (1.0 / sol.dt).max(20.0 * eps_top);
    let steps = ((t - base_time).abs() * per_unit).ceil().max(1.0) as usize;
    let h = (t - base_time) / steps as f64;
    let propagate = |bs: &[CMat], start: CVec| -> CVec {
        let mut phi = start;
        for k in 0..steps {
            let t0 = base_time + k as f64 * h;
            let b0 = interpolate(bs, &sol.t_grid, t0);
            let bh = interpolate(bs, &sol.t_grid, t0 + 0.5 * h);
            let b1 = interpolate(bs, &sol.t_grid, t0 + h);
            let k1 = (&b0 * &phi) * I;
            let k2 = (&bh * (&phi + &k1 * c(0.5 * h))) * I;
            let k3 = (&bh * (&phi + &k2 * c(0.5 * h))) * I;
            let k4 = (&b1 * (&phi + &k3 * c(h))) * I;
            phi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
        }
        phi
    };
    let phi_plus = propagate(&bp, u_plus);
    let phi_minus = propagate(&bm, u_minus);
    let bpt = interpolate(&bp, &sol.t_grid, t);
    let bmt = interpolate(&bm, &sol.t_grid, t);
    let mut out = CVec::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&(&phi_plus + &phi_minus));
    out.rows_mut(n, n).copy_from(&(bpt * phi_plus + bmt * phi_minus));
    Ok(out)
}

/// `U(t, s)`: closed form for static profiles, Runge-Kutta otherwise.
fn propagator(scenario: &Scenario, s: f64, t: f64) -> Result<CMat> {
    if scenario.profile().is_time_independent() {
        let eps = scenario.eps(0.0)?;
        return static_evolution(&eps, t - s);
    }
    Ok(evolve(scenario, s, t)?.matrix)
}

/// `G_F(t, s) = i⁻¹π₀(𝒰⁺_H(t,s)θ(t−s) − 𝒰⁻_H(t,s)θ(s−t))π₁*` with
/// `𝒰±_H(t,s) = U(t,0)c±U(0,s)`; only the `𝒰⁺` term contributes at `t = s`.
pub fn feynman_from_splitting(scenario: &Scenario, split: &Splitting, t: f64, s: f64) -> Result<CMat> {
    let n = scenario.n();
    let base = split.base_time;
    let u_t = propagator(scenario, base, t)?;
    let u_s = propagator(scenario, s, base)?;
    let kernel = if t >= s {
        &u_t * &split.projections.c_plus * &u_s
    } else {
        -(&u_t * &split.projections.c_minus * &u_s)
    };
    Ok(linalg::block(&kernel, 0, 1, n) * (-I))
}

/// `±π₀𝒰±_H(t, s)π₁*`.
pub fn two_point_from_splitting(scenario: &Scenario, split: &Splitting, t: f64, s: f64, plus: bool) -> Result<CMat> {
    let n = scenario.n();
    let base = split.base_time;
    let u_t = propagator(scenario, base, t)?;
    let u_s = propagator(scenario, s, base)?;
    let kernel = if plus {
        &u_t * &split.projections.c_plus * &u_s
    } else {
        -(&u_t * &split.projections.c_minus * &u_s)
    };
    Ok(linalg::block(&kernel, 0, 1, n))
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelResidual {
    pub off_origin: f64,
    pub delta_weight_error: f64,
}

/// Applies `∂_t² + r∂_t + a` in `t` to `G_F(·, s)` on a uniform grid through
/// `s`. Away from `t = s` the result should vanish; at `t = s` it should be
/// `1/Δt` times the identity.
pub fn feynman_pde_residual(scenario: &Scenario, split: &Splitting, s: f64, t_grid: &[f64]) -> Result<KernelResidual> {
    let shifted: Vec<f64> = t_grid.iter().map(|t| t - s).collect();
    let (dt, origin) = uniform_grid_origin(&shifted)?;
    let n = scenario.n();
    let kernels = t_grid
        .iter()
        .map(|&t| feynman_from_splitting(scenario, split, t, s))
        .collect::<Result<Vec<CMat>>>()?;
    let mut off_origin: f64 = 0.0;
    let mut delta_weight_error: f64 = 0.0;
    for i in 1..t_grid.len() - 1 {
        let t = t_grid[i];
        let a = scenario.operator(t)?;
        let r = scenario.rate(t)?;
        let d2 = (&kernels[i + 1] - &kernels[i] * c(2.0) + &kernels[i - 1]) * c(1.0 / (dt * dt));
        let d1 = (&kernels[i + 1] - &kernels[i - 1]) * c(0.5 / dt);
        let res = d2 + linalg::scale_rows(&d1, &r) + a.entries() * &kernels[i];
        let w = a.weight().sqrt();
        if i == origin {
            let weight = res * c(dt) - linalg::identity(n);
            delta_weight_error = linalg::op_norm(&linalg::similarity(&weight, &w));
        } else {
            off_origin = off_origin.max(linalg::op_norm(&linalg::similarity(&res, &w)));
        }
    }
    Ok(KernelResidual {
        off_origin,
        delta_weight_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeDecay {
    pub wavenumbers: Vec<f64>,
    pub values: Vec<f64>,
    /// `p` in `values ≈ C·|k|^{−p}` over the band.
    pub exponent: f64,
}

/// Mode-wise distance between `c⁺` and the instantaneous frequency
/// splitting of `ε`, after normalizing with `diag(ε^{1/2}, ε^{-1/2})` and
/// transforming each block to Fourier modes. Rows `±k` are combined.
pub fn mode_decay(c_plus: &CMat, eps: &WeightedOperator, band: (usize, usize)) -> Result<ModeDecay> {
    let n = eps.n();
    let w = eps.weight().clone();
    let vac = crate::states::vacuum_projections(eps)?;
    let diff = doubled_frame(&(c_plus - &vac.c_plus), &w);
    let spec = eps.spectral()?;
    let half = spec.apply(f64::sqrt, "")?.frame();
    let mhalf = spec.apply(|x| 1.0 / x.sqrt(), "")?.frame();
    let norm = linalg::block_diag(&half, &mhalf);
    let norm_inv = linalg::block_diag(&mhalf, &half);
    let f = linalg::dft_matrix(n);
    let f2 = linalg::block_diag(&f, &f);
    let modal = &f2 * norm * diff * norm_inv * f2.adjoint();
    let row_norm = |r: usize| (0..2 * n).map(|j| modal[(r, j)].norm_sqr()).sum::<f64>();
    let mut wavenumbers = Vec::new();
    let mut values = Vec::new();
    for k in band.0 + 1..=band.1.min(n / 2) {
        let mut total = row_norm(k) + row_norm(n + k);
        if k != n - k && k < n {
            total += row_norm(n - k) + row_norm(2 * n - k);
        }
        wavenumbers.push(k as f64);
        values.push(total.sqrt());
    }
    let exponent = -linalg::power_law_exponent(&wavenumbers, &values);
    Ok(ModeDecay {
        wavenumbers,
        values,
        exponent,
    })
}
