//! Cauchy evolution of `∂_t²φ + r∂_tφ + aφ = 0` on data `f = (φ, i⁻¹∂_tφ)`,
//! transport of covariances and scattering in/out vacua.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{weight_at, Grid, MetricProfile, WeightVector};
use crate::linalg::{self, c, CMat, C64, I};
use crate::opcalc::{build_spatial_operator, spatial_stencil, sqrt_positive, Stencil, WeightedOperator};
use crate::states::{self, doubled_frame, from_doubled_frame, vacuum_covariances, CovariancePair, StateReport};

/// Time window, geometry and step size of an evolution problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    profile: MetricProfile,
    grid: Grid,
    t_min: f64,
    t_max: f64,
    steps_per_unit: usize,
    eps_max: f64,
}

/// Smallest step count per unit time allowed by the resolution rule.
pub fn required_steps(eps_max: f64) -> usize {
    (8.0 * eps_max / (2.0 * PI)).ceil() as usize
}

/// Default step count, keeping `ε_max·Δt ≤ 0.025`.
pub fn default_steps(eps_max: f64) -> usize {
    required_steps(eps_max).max((40.0 * eps_max).ceil() as usize)
}

impl Scenario {
    pub fn new(profile: MetricProfile, grid: Grid, t_min: f64, t_max: f64, steps_per_unit: Option<usize>) -> Result<Self> {
        if !(t_min < 0.0 && 0.0 < t_max) {
            return Err(Error::InvalidParameter(format!(
                "time window must satisfy t_min < 0 < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if !profile.has_unit_lapse() {
            return Err(Error::InvalidParameter(
                "time-dependent evolution needs unit lapse; use the static reduction for N ≠ 1".into(),
            ));
        }
        let samples = 64;
        let mut bound: f64 = 0.0;
        for k in 0..=samples {
            let t = t_min + (t_max - t_min) * k as f64 / samples as f64;
            let (st, _) = spatial_stencil(&profile, &grid, t)?;
            bound = bound.max(st.spectral_bound());
        }
        let eps_max = bound.sqrt();
        let required = required_steps(eps_max);
        let steps_per_unit = match steps_per_unit {
            Some(s) if s < required => {
                return Err(Error::Resolution {
                    steps_per_unit: s,
                    required,
                })
            }
            Some(s) => s,
            None => default_steps(eps_max),
        };
        Ok(Self {
            profile,
            grid,
            t_min,
            t_max,
            steps_per_unit,
            eps_max,
        })
    }

    /// Same geometry with another step count, subject to the resolution rule.
    pub fn with_steps_per_unit(&self, steps_per_unit: usize) -> Result<Self> {
        let required = required_steps(self.eps_max);
        if steps_per_unit < required {
            return Err(Error::Resolution {
                steps_per_unit,
                required,
            });
        }
        Ok(Self {
            steps_per_unit,
            ..self.clone()
        })
    }

    pub fn profile(&self) -> &MetricProfile {
        &self.profile
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n_points()
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    /// Gershgorin bound on the largest eigenfrequency over the window.
    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * (self.t_max - self.t_min);
        if t < self.t_min - slack || t > self.t_max + slack || !t.is_finite() {
            return Err(Error::OutOfWindow {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            });
        }
        Ok(())
    }

    pub fn weight(&self, t: f64) -> Result<WeightVector> {
        weight_at(&self.profile, &self.grid, t)
    }

    pub fn operator(&self, t: f64) -> Result<WeightedOperator> {
        self.check_time(t)?;
        build_spatial_operator(&self.profile, &self.grid, t)
    }

    pub fn eps(&self, t: f64) -> Result<WeightedOperator> {
        sqrt_positive(&self.operator(t)?)
    }

    /// `r = ½ ∂_t h / h` at the grid nodes.
    pub fn rate(&self, t: f64) -> Result<Vec<f64>> {
        self.grid
            .coordinates()
            .iter()
            .map(|&x| {
                let h = self.profile.h_checked(t, x)?;
                let dh = self.profile.dh_dt(t, x).ok_or(Error::NotDifferentiable { t })?;
                Ok(0.5 * dh / h)
            })
            .collect()
    }

    fn pieces(&self, t: f64) -> Result<(Stencil, Vec<f64>)> {
        let (st, _) = spatial_stencil(&self.profile, &self.grid, t)?;
        Ok((st, self.rate(t)?))
    }
}

/// `H(t) = [[0, 1], [a(t), i r(t)]]`.
pub fn assemble_generator(scenario: &Scenario, t: f64) -> Result<CMat> {
    scenario.check_time(t)?;
    let n = scenario.n();
    let (st, r) = scenario.pieces(t)?;
    let z = CMat::zeros(n, n);
    let ir = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(n, r.iter().map(|v| I * *v)));
    Ok(linalg::block2(&z, &linalg::identity(n), &st.to_dense(), &ir))
}

/// `U(t, s)` on coordinate Cauchy data, with the weights at both ends.
#[derive(Debug, Clone)]
pub struct EvolutionOperator {
    pub matrix: CMat,
    pub t_from: f64,
    pub t_to: f64,
    pub weight_from: WeightVector,
    pub weight_to: WeightVector,
}

impl EvolutionOperator {
    pub fn identity(weight: WeightVector, t: f64) -> Self {
        let n = weight.len();
        Self {
            matrix: linalg::identity(2 * n),
            t_from: t,
            t_to: t,
            weight_from: weight.clone(),
            weight_to: weight,
        }
    }

    /// `S_to U S_from⁻¹`, the map between orthonormal frames.
    pub fn frame(&self) -> CMat {
        let left = self.weight_to.doubled_sqrt();
        let right: Vec<f64> = self.weight_from.doubled_sqrt().iter().map(|v| 1.0 / v).collect();
        linalg::scale_cols(&linalg::scale_rows(&self.matrix, &left), &right)
    }

    /// `‖Ũ* q Ũ − q‖`.
    pub fn symplecticity_defect(&self) -> f64 {
        let u = self.frame();
        let q = linalg::swap_blocks(self.weight_from.len());
        linalg::op_norm(&(u.adjoint() * &q * &u - &q))
    }

    /// `self ∘ earlier`, i.e. `U(t, r) U(r, s)`.
    pub fn after(&self, earlier: &Self) -> Result<Self> {
        if (self.t_from - earlier.t_to).abs() > 1e-12 * (1.0 + self.t_from.abs()) {
            return Err(Error::InvalidParameter(format!(
                "cannot compose U({}, {}) after U({}, {})",
                self.t_to, self.t_from, earlier.t_to, earlier.t_from
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &earlier.matrix,
            t_from: earlier.t_from,
            t_to: self.t_to,
            weight_from: earlier.weight_from.clone(),
            weight_to: self.weight_to.clone(),
        })
    }

    pub fn apply(&self, f: &crate::linalg::CVec) -> crate::linalg::CVec {
        &self.matrix * f
    }
}

/// `dU = iH U`, applied with the sparse stencil.
fn generator_apply(st: &Stencil, r: &[f64], u: &CMat, out: &mut CMat) {
    let n = st.n();
    let mut col0 = vec![C64::new(0.0, 0.0); n];
    let mut au = vec![C64::new(0.0, 0.0); n];
    for c_idx in 0..u.ncols() {
        for j in 0..n {
            col0[j] = u[(j, c_idx)];
        }
        st.apply(&col0, &mut au);
        for j in 0..n {
            let u1 = u[(n + j, c_idx)];
            out[(j, c_idx)] = I * u1;
            out[(n + j, c_idx)] = I * au[j] - u1 * r[j];
        }
    }
}

/// Time-ordered exponential by classical fourth-order Runge-Kutta.
pub fn evolve(scenario: &Scenario, s: f64, t: f64) -> Result<EvolutionOperator> {
    scenario.check_time(s)?;
    scenario.check_time(t)?;
    let n = scenario.n();
    let weight_from = scenario.weight(s)?;
    let weight_to = scenario.weight(t)?;
    let steps = ((t - s).abs() * scenario.steps_per_unit as f64).ceil() as usize;
    let mut u = linalg::identity(2 * n);
    if steps > 0 {
        let h = (t - s) / steps as f64;
        let mut k1 = CMat::zeros(2 * n, 2 * n);
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut start = scenario.pieces(s)?;
        for step in 0..steps {
            let t0 = s + step as f64 * h;
            let mid = scenario.pieces(t0 + 0.5 * h)?;
            let end = scenario.pieces(if step + 1 == steps { t } else { t0 + h })?;
            generator_apply(&start.0, &start.1, &u, &mut k1);
            let tmp = &u + &k1 * c(0.5 * h);
            generator_apply(&mid.0, &mid.1, &tmp, &mut k2);
            let tmp = &u + &k2 * c(0.5 * h);
            generator_apply(&mid.0, &mid.1, &tmp, &mut k3);
            let tmp = &u + &k3 * c(h);
            generator_apply(&end.0, &end.1, &tmp, &mut k4);
            u += (&k1 + &k2 * c(2.0) + &k3 * c(2.0) + &k4) * c(h / 6.0);
            start = end;
        }
    }
    Ok(EvolutionOperator {
        matrix: u,
        t_from: s,
        t_to: t,
        weight_from,
        weight_to,
    })
}

/// Closed-form `U(t) = [[cos εt, iε⁻¹ sin εt], [iε sin εt, cos εt]]` of a static model.
pub fn static_evolution(eps: &WeightedOperator, t: f64) -> Result<CMat> {
    let spec = eps.spectral()?;
    let cos = spec.apply(|x| (x * t).cos(), "cos")?.into_entries();
    let sin_over = spec.apply_complex(|x| I * (x * t).sin() / x, "sin/ε")?.into_entries();
    let sin_times = spec.apply_complex(|x| I * (x * t).sin() * x, "ε sin")?.into_entries();
    Ok(linalg::block2(&cos, &sin_over, &sin_times, &cos))
}

/// `λ±_s = U(t, s)* λ±_t U(t, s)`, taken in orthonormal frames.
pub fn transport_covariances(cov: &CovariancePair, u: &EvolutionOperator) -> Result<CovariancePair> {
    if !cov.weight().matches(&u.weight_to, 1e-10) {
        return Err(Error::WeightMismatch(format!(
            "covariance '{}' and the target time {} of the evolution",
            cov.provenance(),
            u.t_to
        )));
    }
    let f = u.frame();
    let p = f.adjoint() * cov.frame_plus() * &f;
    let m = f.adjoint() * cov.frame_minus() * &f;
    CovariancePair::from_frames(&p, &m, u.weight_from.clone(), format!("{}@t={}", cov.provenance(), u.t_from))
}

/// Energy form `q∘H = [[a, 0], [0, 1]]` of a static model, in the frame.
pub fn static_energy_frame(a: &WeightedOperator) -> CMat {
    let n = a.n();
    let z = CMat::zeros(n, n);
    linalg::block2(&a.frame(), &z, &z, &linalg::identity(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Out,
    In,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Out => 1.0,
            Side::In => -1.0,
        }
    }
}

/// Asymptotic operator `ε_out/in` on the scenario grid.
pub fn asymptotic_eps(scenario: &Scenario, side: Side) -> Result<WeightedOperator> {
    let asym = scenario.profile().asymptotics().ok_or(Error::NoAsymptotics)?;
    let profile = match side {
        Side::Out => &asym.out_profile,
        Side::In => &asym.in_profile,
    };
    sqrt_positive(&build_spatial_operator(profile, scenario.grid(), 0.0)?)
}

fn horizon_time(scenario: &Scenario, horizon: f64, side: Side) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let t = side.sign() * horizon;
    scenario.check_time(t)?;
    Ok(t)
}

/// Pulls the asymptotic vacuum back from `±T` to `t = 0`. Data at `±T` is
/// identified with asymptotic data through the orthonormal frames.
fn pulled_back_vacuum(u: &EvolutionOperator, vac: &CovariancePair, horizon: f64) -> Result<CovariancePair> {
    let f = u.frame();
    let p = f.adjoint() * vac.frame_plus() * &f;
    let m = f.adjoint() * vac.frame_minus() * &f;
    CovariancePair::from_frames(&p, &m, u.weight_from.clone(), format!("vacuum(0; T={horizon})"))
}

pub fn out_in_vacuum(scenario: &Scenario, horizon: f64, side: Side) -> Result<CovariancePair> {
    let t = horizon_time(scenario, horizon, side)?;
    let vac = vacuum_covariances(&asymptotic_eps(scenario, side)?)?;
    let u = evolve(scenario, 0.0, t)?;
    pulled_back_vacuum(&u, &vac, horizon)
}

/// Frame matrix of `W(T) = U_asym(0, ±T) U(±T, 0)`.
pub fn wave_operator(scenario: &Scenario, horizon: f64, side: Side) -> Result<CMat> {
    let asym = scenario.profile().asymptotics().ok_or(Error::NoAsymptotics)?;
    if !(asym.decay_exponent > 1.0) {
        return Err(Error::ShortRange {
            delta: asym.decay_exponent,
        });
    }
    let t = horizon_time(scenario, horizon, side)?;
    let u = evolve(scenario, 0.0, t)?;
    let eps = asymptotic_eps(scenario, side)?;
    Ok(wave_from_parts(&eps, &u, t)?)
}

fn wave_from_parts(eps: &WeightedOperator, u: &EvolutionOperator, t: f64) -> Result<CMat> {
    let back = doubled_frame(&static_evolution(eps, -t)?, eps.weight());
    Ok(back * u.frame())
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub horizon: f64,
    pub defect: f64,
    pub wave_defect: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterLadder {
    pub side: Side,
    pub decay_exponent: f64,
    /// `‖λ(0; T_k) − λ(0; T_{k−1})‖` against `T_k`.
    pub rows: Vec<LadderRow>,
    /// Log-log slope of the vacuum ladder.
    pub fitted_rate: f64,
    /// Log-log slope of the wave-operator ladder, when it exists.
    pub wave_fitted_rate: Option<f64>,
    pub converged: bool,
    pub final_report: StateReport,
    pub final_purity: f64,
    /// `‖λ(0; T) − W* λ_vac W‖` at the largest horizon.
    pub wave_crosscheck: Option<f64>,
    #[serde(skip)]
    pub final_pair: Option<CovariancePair>,
}

/// Runs the T-ladder of pulled-back asymptotic vacua.
pub fn scatter_ladder(scenario: &Scenario, horizons: &[f64], side: Side, tol: f64) -> Result<ScatterLadder> {
    if horizons.len() < 2 || horizons.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("horizons must be an increasing list of at least two values".into()));
    }
    let asym = scenario.profile().asymptotics().ok_or(Error::NoAsymptotics)?;
    let delta = asym.decay_exponent;
    let eps = asymptotic_eps(scenario, side)?;
    let vac = vacuum_covariances(&eps)?;
    let times = horizons
        .iter()
        .map(|&h| horizon_time(scenario, h, side))
        .collect::<Result<Vec<f64>>>()?;

    let mut u = evolve(scenario, 0.0, times[0])?;
    let mut pairs = vec![pulled_back_vacuum(&u, &vac, horizons[0])?];
    let mut waves = vec![wave_from_parts(&eps, &u, times[0])?];
    for k in 1..times.len() {
        let step = evolve(scenario, times[k - 1], times[k])?;
        u = step.after(&u)?;
        pairs.push(pulled_back_vacuum(&u, &vac, horizons[k])?);
        waves.push(wave_from_parts(&eps, &u, times[k])?);
    }

    let short_range = delta > 1.0;
    let mut rows = Vec::new();
    for k in 1..pairs.len() {
        rows.push(LadderRow {
            horizon: horizons[k],
            defect: pairs[k].distance(&pairs[k - 1])?,
            wave_defect: short_range.then(|| linalg::op_norm(&(&waves[k] - &waves[k - 1]))),
        });
    }
    let first = rows[0].defect;
    let last = rows[rows.len() - 1].defect;
    if last > first && last > tol {
        return Err(Error::Divergence(format!(
            "successive difference grew from {first:e} at T = {} to {last:e} at T = {}",
            rows[0].horizon,
            rows[rows.len() - 1].horizon
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.horizon).collect();
    let fitted_rate = linalg::power_law_exponent(&xs, &rows.iter().map(|r| r.defect).collect::<Vec<_>>());
    let wave_fitted_rate = short_range.then(|| {
        linalg::power_law_exponent(&xs, &rows.iter().map(|r| r.wave_defect.unwrap()).collect::<Vec<_>>())
    });
    let converged = rows.len() >= 2 && rows[rows.len() - 2..].iter().all(|r| r.defect <= tol);

    let final_pair = pairs.pop().unwrap();
    let wave_crosscheck = if short_range {
        let w = waves.last().unwrap();
        let p = w.adjoint() * vac.frame_plus() * w;
        let m = w.adjoint() * vac.frame_minus() * w;
        Some(linalg::op_norm(&(p - final_pair.frame_plus())).max(linalg::op_norm(&(m - final_pair.frame_minus()))))
    } else {
        None
    };
    Ok(ScatterLadder {
        side,
        decay_exponent: delta,
        rows,
        fitted_rate,
        wave_fitted_rate,
        converged,
        final_report: states::validate_state(&final_pair),
        final_purity: states::purity_defect(&final_pair)?,
        wave_crosscheck,
        final_pair: Some(final_pair),
    })
}

/// Converts a frame-matrix form back to coordinates for a given weight.
pub fn frame_to_coordinates(frame: &CMat, weight: &WeightVector) -> CMat {
    from_doubled_frame(frame, weight)
}
