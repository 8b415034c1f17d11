//! Quasi-free states: covariance pairs on doubled Cauchy data, their
//! validation, purity, n-point functions and the static lapse reduction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, MetricProfile, WeightVector};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::opcalc::{spatial_stencil, WeightedOperator};

/// `((f|q g)) = (f₁|g₀)_w + (f₀|g₁)_w`, stored as the block swap together with `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeForm {
    q: CMat,
    weight: WeightVector,
}

impl ChargeForm {
    pub fn new(weight: WeightVector) -> Self {
        Self {
            q: linalg::swap_blocks(weight.len()),
            weight,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.q
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    /// Evaluates `((f|q g))`.
    pub fn pair(&self, f: &CVec, g: &CVec) -> C64 {
        form_value(&self.q, &self.weight, f, g)
    }
}

/// `f* W₂ m g` for a form stored as an operator matrix on doubled data.
pub fn form_value(m: &CMat, weight: &WeightVector, f: &CVec, g: &CVec) -> C64 {
    let mg = m * g;
    let w = weight.doubled();
    f.iter()
        .zip(mg.iter())
        .zip(&w)
        .map(|((a, b), wj)| a.conj() * b * *wj)
        .sum()
}

/// Orthonormal-frame matrix of a doubled form, `S₂ m S₂⁻¹`.
pub fn doubled_frame(m: &CMat, weight: &WeightVector) -> CMat {
    linalg::similarity(m, &weight.doubled_sqrt())
}

pub fn from_doubled_frame(frame: &CMat, weight: &WeightVector) -> CMat {
    let inv: Vec<f64> = weight.doubled_sqrt().iter().map(|v| 1.0 / v).collect();
    linalg::similarity(frame, &inv)
}

/// The pair `(λ⁺, λ⁻)` of Hermitian forms defining a gauge-invariant
/// quasi-free state.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    lambda_plus: CMat,
    lambda_minus: CMat,
    charge: ChargeForm,
    provenance: String,
}

impl CovariancePair {
    pub fn new(lambda_plus: CMat, lambda_minus: CMat, weight: WeightVector, provenance: impl Into<String>) -> Result<Self> {
        let n2 = 2 * weight.len();
        for m in [&lambda_plus, &lambda_minus] {
            if m.nrows() != n2 || m.ncols() != n2 {
                return Err(Error::DimensionMismatch {
                    expected: n2,
                    got: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(Self {
            lambda_plus,
            lambda_minus,
            charge: ChargeForm::new(weight),
            provenance: provenance.into(),
        })
    }

    /// Builds a pair from orthonormal-frame matrices.
    pub fn from_frames(plus: &CMat, minus: &CMat, weight: WeightVector, provenance: impl Into<String>) -> Result<Self> {
        let p = from_doubled_frame(plus, &weight);
        let m = from_doubled_frame(minus, &weight);
        Self::new(p, m, weight, provenance)
    }

    pub fn lambda_plus(&self) -> &CMat {
        &self.lambda_plus
    }

    pub fn lambda_minus(&self) -> &CMat {
        &self.lambda_minus
    }

    pub fn charge(&self) -> &ChargeForm {
        &self.charge
    }

    pub fn weight(&self) -> &WeightVector {
        &self.charge.weight
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn n(&self) -> usize {
        self.weight().len()
    }

    pub fn frame_plus(&self) -> CMat {
        doubled_frame(&self.lambda_plus, self.weight())
    }

    pub fn frame_minus(&self) -> CMat {
        doubled_frame(&self.lambda_minus, self.weight())
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.frame_plus()).max(linalg::op_norm(&self.frame_minus()))
    }

    /// Largest frame distance between the `+` and `−` components of two pairs.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if !self.weight().matches(other.weight(), 1e-12) {
            return Err(Error::WeightMismatch(format!(
                "'{}' and '{}'",
                self.provenance, other.provenance
            )));
        }
        let dp = linalg::op_norm(&(self.frame_plus() - other.frame_plus()));
        let dm = linalg::op_norm(&(self.frame_minus() - other.frame_minus()));
        Ok(dp.max(dm))
    }

    /// `‖λ⁺ − λ⁻ − q‖` in the frame.
    pub fn ccr_defect(&self) -> f64 {
        let d = self.frame_plus() - self.frame_minus() - self.charge.matrix();
        linalg::op_norm(&d)
    }
}

/// Complementary projections with `λ± = ±q∘c±`.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub c_plus: CMat,
    pub c_minus: CMat,
    pub weight: WeightVector,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub partition: f64,
    pub idempotency: f64,
    pub q_orthogonality: f64,
    pub positivity: f64,
}

impl ProjectionReport {
    pub fn max_defect(&self) -> f64 {
        self.partition
            .max(self.idempotency)
            .max(self.q_orthogonality)
            .max(self.positivity)
    }
}

impl ProjectionPair {
    pub fn frames(&self) -> (CMat, CMat) {
        (
            doubled_frame(&self.c_plus, &self.weight),
            doubled_frame(&self.c_minus, &self.weight),
        )
    }

    /// Defects of the projection-pair invariants, relative to `max(1, ‖c±‖)`.
    pub fn report(&self) -> ProjectionReport {
        let (p, m) = self.frames();
        let n2 = p.nrows();
        let q = linalg::swap_blocks(n2 / 2);
        let scale = linalg::op_norm(&p).max(linalg::op_norm(&m)).max(1.0);
        let partition = linalg::op_norm(&(&p + &m - linalg::identity(n2))) / scale;
        let idempotency = (linalg::op_norm(&(&p * &p - &p)))
            .max(linalg::op_norm(&(&m * &m - &m)))
            / (scale * scale);
        let q_orthogonality = linalg::op_norm(&(m.adjoint() * &q * &p))
            .max(linalg::op_norm(&(p.adjoint() * &q * &m)))
            / (scale * scale);
        let qp = &q * &p;
        let qm = -(&q * &m);
        let herm = linalg::op_norm(&(&qp - qp.adjoint())).max(linalg::op_norm(&(&qm - qm.adjoint())));
        let neg = (-linalg::min_eigenvalue(&qp)).max(-linalg::min_eigenvalue(&qm)).max(0.0);
        ProjectionReport {
            partition,
            idempotency,
            q_orthogonality,
            positivity: herm.max(neg) / scale,
        }
    }

    pub fn covariances(&self, provenance: &str) -> Result<CovariancePair> {
        let q = linalg::swap_blocks(self.weight.len());
        CovariancePair::new(
            &q * &self.c_plus,
            -(&q * &self.c_minus),
            self.weight.clone(),
            provenance,
        )
    }
}

fn positive_spectrum(eps: &WeightedOperator) -> Result<crate::opcalc::SpectralDecomposition> {
    let spec = eps.spectral()?;
    if let Some(&min_eigenvalue) = spec.eigenvalues().first() {
        if !(min_eigenvalue > 0.0) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
    }
    Ok(spec)
}

/// `½[[f(ε)·ε, ±1], [±1, f(ε)·ε⁻¹]]` for a spectral occupation factor `f`.
fn diagonal_pair<F>(eps: &WeightedOperator, f: F, provenance: &str) -> Result<CovariancePair>
where
    F: Fn(f64) -> f64,
{
    let spec = positive_spectrum(eps)?;
    let top = spec.apply(|x| 0.5 * x * f(x), "")?.into_entries();
    let bottom = spec.apply(|x| 0.5 * f(x) / x, "")?.into_entries();
    let n = eps.n();
    let half = linalg::identity(n) * c(0.5);
    let plus = linalg::block2(&top, &half, &half, &bottom);
    let minus = linalg::block2(&top, &(-&half), &(-&half), &bottom);
    CovariancePair::new(plus, minus, eps.weight().clone(), provenance)
}

pub fn vacuum_covariances(eps: &WeightedOperator) -> Result<CovariancePair> {
    diagonal_pair(eps, |_| 1.0, "vacuum")
}

pub fn vacuum_projections(eps: &WeightedOperator) -> Result<ProjectionPair> {
    let spec = positive_spectrum(eps)?;
    let e = spec.apply(|x| x, "ε")?.into_entries();
    let einv = spec.apply(|x| 1.0 / x, "ε⁻¹")?.into_entries();
    let n = eps.n();
    let half = linalg::identity(n) * c(0.5);
    let (e, einv) = (e * c(0.5), einv * c(0.5));
    Ok(ProjectionPair {
        c_plus: linalg::block2(&half, &einv, &e, &half),
        c_minus: linalg::block2(&half, &(-&einv), &(-&e), &half),
        weight: eps.weight().clone(),
    })
}

/// Thermal pair at inverse temperature β, with occupation `coth(βε/2)`.
pub fn thermal_covariances(eps: &WeightedOperator, beta: f64) -> Result<CovariancePair> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    diagonal_pair(eps, |x| 1.0 / (0.5 * beta * x).tanh(), &format!("thermal(β={beta})"))
}

/// `‖λ⁺(1 − e^{−βb}) − q‖ / (‖λ⁺‖‖1 − e^{−βb}‖)` with
/// `e^{−βb} = e^{−βε}c⁺ + e^{βε}c⁻` for the ultrastatic generator of `ε`.
pub fn kms_defect(cov: &CovariancePair, eps: &WeightedOperator, beta: f64) -> Result<f64> {
    let proj = vacuum_projections(eps)?;
    let spec = positive_spectrum(eps)?;
    let n = eps.n();
    let z = CMat::zeros(n, n);
    let down = spec.apply(|x| (-beta * x).exp(), "")?.into_entries();
    let up = spec.apply(|x| (beta * x).exp(), "")?.into_entries();
    let e_minus = linalg::block2(&down, &z, &z, &down) * &proj.c_plus
        + linalg::block2(&up, &z, &z, &up) * &proj.c_minus;
    let factor = linalg::identity(2 * n) - e_minus;
    let lhs = cov.lambda_plus() * &factor;
    let d = doubled_frame(&(lhs - linalg::swap_blocks(n)), cov.weight());
    let scale = linalg::op_norm(&cov.frame_plus()) * linalg::op_norm(&doubled_frame(&factor, cov.weight()));
    Ok(linalg::op_norm(&d) / scale)
}

#[derive(Debug, Clone, Serialize)]
pub struct StateDefects {
    pub hermiticity: f64,
    pub psd_plus: f64,
    pub psd_minus: f64,
    pub ccr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub provenance: String,
    pub defects: StateDefects,
    pub valid: bool,
    pub purity_defect: Option<f64>,
}

/// Absolute defects of the state conditions; valid iff each is at most
/// `1e-9·max(1, ‖λ±‖)`.
pub fn validate_state(cov: &CovariancePair) -> StateReport {
    let p = cov.frame_plus();
    let m = cov.frame_minus();
    let hermiticity = linalg::op_norm(&(&p - p.adjoint())).max(linalg::op_norm(&(&m - m.adjoint())));
    let psd_plus = (-linalg::min_eigenvalue(&p)).max(0.0);
    let psd_minus = (-linalg::min_eigenvalue(&m)).max(0.0);
    let ccr = cov.ccr_defect();
    let scale = cov.norm().max(1.0);
    let tol = 1e-9 * scale;
    let valid = [hermiticity, psd_plus, psd_minus, ccr].iter().all(|d| *d <= tol && d.is_finite());
    StateReport {
        provenance: cov.provenance().to_string(),
        defects: StateDefects {
            hermiticity,
            psd_plus,
            psd_minus,
            ccr,
        },
        valid,
        purity_defect: purity_defect(cov).ok(),
    }
}

/// `‖q M⁻¹ q − M‖ / ‖M‖` with `M = λ⁺ + λ⁻`.
pub fn purity_defect(cov: &CovariancePair) -> Result<f64> {
    let m = cov.frame_plus() + cov.frame_minus();
    let q = cov.charge().matrix();
    let minv = linalg::inverse(&m, "λ⁺ + λ⁻")?;
    let d = q * minv * q - &m;
    Ok(linalg::op_norm(&d) / linalg::op_norm(&m))
}

/// `ω(ψ*(y)ψ(y')) = ((y'|λ⁻ y))`.
pub fn pairing(cov: &CovariancePair, y: &CVec, y_prime: &CVec) -> Result<C64> {
    let n2 = 2 * cov.n();
    for v in [y, y_prime] {
        if v.len() != n2 {
            return Err(Error::DimensionMismatch {
                expected: n2,
                got: v.len(),
            });
        }
    }
    Ok(form_value(cov.lambda_minus(), cov.weight(), y_prime, y))
}

/// Permanent by Ryser's inclusion-exclusion formula.
pub fn permanent(a: &CMat) -> C64 {
    let n = a.nrows();
    if n == 0 {
        return c(1.0);
    }
    let mut total = C64::new(0.0, 0.0);
    for subset in 1u64..(1u64 << n) {
        let mut prod = c(1.0);
        for i in 0..n {
            let row: C64 = (0..n).filter(|j| subset >> j & 1 == 1).map(|j| a[(i, j)]).sum();
            prod *= row;
        }
        let sign = if (n - subset.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

/// `ω(Πψ*(y_i) Πψ(y'_j))`, a permanent of pairings; zero for unequal lengths.
pub fn npoint_function(cov: &CovariancePair, starred: &[CVec], unstarred: &[CVec]) -> Result<C64> {
    if starred.len() != unstarred.len() {
        return Ok(C64::new(0.0, 0.0));
    }
    let n = starred.len();
    let mut m = CMat::zeros(n, n);
    for (i, y) in starred.iter().enumerate() {
        for (j, yp) in unstarred.iter().enumerate() {
            m[(i, j)] = pairing(cov, y, yp)?;
        }
    }
    Ok(permanent(&m))
}

/// Ground and KMS data of a static metric `−N²dt² + h dx²` with zero shift.
#[derive(Debug, Clone)]
pub struct StaticReduction {
    /// `h̃₀ = N h₀ N`, self-adjoint for the weight `N√h·Δx`.
    pub h_tilde: WeightedOperator,
    pub eps_tilde: WeightedOperator,
    pub lapse: Vec<f64>,
    /// Surface weight `√h·Δx` of the physical Cauchy data.
    pub surface_weight: WeightVector,
    pub ground: CovariancePair,
    /// Smallest eigenvalue of the energy form `E = q∘b`.
    pub energy_min_eigenvalue: f64,
    /// Smallest eigenvalue of `h̃₀ − N V N`.
    pub lemma_min_eigenvalue: f64,
}

impl StaticReduction {
    /// Transfers a pair built on `ε̃` to the physical Cauchy data.
    pub fn pull_back(&self, tilde: &CovariancePair, provenance: &str) -> Result<CovariancePair> {
        let n = self.lapse.len();
        let mut left = vec![1.0; 2 * n];
        let mut right = vec![1.0; 2 * n];
        for j in 0..n {
            left[n + j] = self.lapse[j];
            right[j] = 1.0 / self.lapse[j];
        }
        let conj = |m: &CMat| linalg::scale_cols(&linalg::scale_rows(m, &left), &right);
        CovariancePair::new(
            conj(tilde.lambda_plus()),
            conj(tilde.lambda_minus()),
            self.surface_weight.clone(),
            provenance,
        )
    }

    pub fn kms(&self, beta: f64) -> Result<CovariancePair> {
        let tilde = thermal_covariances(&self.eps_tilde, beta)?;
        self.pull_back(&tilde, &format!("kms(β={beta})"))
    }
}

pub fn static_reduction(profile: &MetricProfile, grid: &Grid) -> Result<StaticReduction> {
    if !profile.is_time_independent() {
        return Err(Error::InvalidParameter(format!(
            "static reduction needs a time-independent profile, got '{}'",
            profile.name()
        )));
    }
    let (stencil, weight) = spatial_stencil(profile, grid, 0.0)?;
    let lapse = grid
        .coordinates()
        .iter()
        .map(|&x| profile.lapse_checked(x))
        .collect::<Result<Vec<f64>>>()?;
    let h0 = stencil.to_dense();
    let h_tilde = WeightedOperator::new(
        linalg::scale_cols(&linalg::scale_rows(&h0, &lapse), &lapse),
        weight.clone(),
        "h̃₀",
    )?;
    let min_eigenvalue = h_tilde.min_eigenvalue();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    let eps_tilde = crate::opcalc::sqrt_positive(&h_tilde)?.with_label("ε̃");

    let inv_lapse: Vec<f64> = lapse.iter().map(|v| 1.0 / v).collect();
    let surface_weight = weight.scaled(&inv_lapse);

    let nvn: Vec<f64> = grid
        .coordinates()
        .iter()
        .zip(&lapse)
        .map(|(&x, nj)| nj * nj * profile.potential(0.0, x))
        .collect();
    let lemma = WeightedOperator::new(h_tilde.entries() - linalg::diag_real(&nvn), weight.clone(), "h̃₀−NVN")?;
    let lemma_min_eigenvalue = lemma.min_eigenvalue();

    let nh0 = WeightedOperator::new(linalg::scale_rows(&h0, &lapse), surface_weight.clone(), "Nh₀")?;
    let energy_min_eigenvalue = nh0
        .min_eigenvalue()
        .min(lapse.iter().copied().fold(f64::INFINITY, f64::min));

    let mut red = StaticReduction {
        h_tilde,
        eps_tilde,
        lapse,
        surface_weight: surface_weight.clone(),
        ground: CovariancePair::new(
            CMat::zeros(2 * grid.n_points(), 2 * grid.n_points()),
            CMat::zeros(2 * grid.n_points(), 2 * grid.n_points()),
            surface_weight,
            "",
        )?,
        energy_min_eigenvalue,
        lemma_min_eigenvalue,
    };
    let tilde = vacuum_covariances(&red.eps_tilde)?;
    red.ground = red.pull_back(&tilde, "ground")?;
    Ok(red)
}
