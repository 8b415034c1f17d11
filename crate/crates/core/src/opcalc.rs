//! Weighted operators, the discrete spatial Klein-Gordon operator and
//! spectral functional calculus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MetricProfile, WeightVector};
use crate::linalg::{self, c, CMat, C64};

/// Linear map on mode space together with the weight that defines its adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperator {
    entries: CMat,
    weight: WeightVector,
    label: String,
}

impl WeightedOperator {
    pub fn new(entries: CMat, weight: WeightVector, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != weight.len() || entries.ncols() != weight.len() {
            return Err(Error::DimensionMismatch {
                expected: weight.len(),
                got: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self {
            entries,
            weight,
            label: label.into(),
        })
    }

    /// Rebuilds an operator from its orthonormal-frame matrix `S A S⁻¹`.
    pub fn from_frame(frame: &CMat, weight: WeightVector, label: impl Into<String>) -> Result<Self> {
        let s = weight.sqrt();
        let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        Self::new(linalg::similarity(frame, &inv), weight, label)
    }

    pub fn diagonal(values: &[f64], weight: WeightVector, label: impl Into<String>) -> Result<Self> {
        Self::new(linalg::diag_real(values), weight, label)
    }

    pub fn identity(weight: WeightVector) -> Self {
        let n = weight.len();
        Self {
            entries: linalg::identity(n),
            weight,
            label: "1".into(),
        }
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Matrix in the orthonormal frame, Hermitian iff the operator is
    /// self-adjoint for its weight.
    pub fn frame(&self) -> CMat {
        linalg::similarity(&self.entries, &self.weight.sqrt())
    }

    pub fn norm(&self) -> f64 {
        linalg::op_norm(&self.frame())
    }

    /// `‖A − A†_w‖ / ‖A‖`, zero for the zero operator.
    pub fn self_adjoint_defect(&self) -> f64 {
        let f = self.frame();
        let norm = linalg::op_norm(&f);
        if norm == 0.0 {
            return 0.0;
        }
        linalg::op_norm(&(&f - f.adjoint())) / norm
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.frame())
    }

    pub fn max_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.frame())
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    fn check_weight(&self, other: &Self) -> Result<()> {
        if !self.weight.matches(&other.weight, 1e-12) {
            return Err(Error::WeightMismatch(format!(
                "'{}' and '{}'",
                self.label, other.label
            )));
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_weight(other)?;
        Ok(Self {
            entries: &self.entries * &other.entries,
            weight: self.weight.clone(),
            label: format!("{}·{}", self.label, other.label),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_weight(other)?;
        Ok(Self {
            entries: &self.entries + &other.entries,
            weight: self.weight.clone(),
            label: format!("{}+{}", self.label, other.label),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_weight(other)?;
        Ok(Self {
            entries: &self.entries - &other.entries,
            weight: self.weight.clone(),
            label: format!("{}-{}", self.label, other.label),
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            entries: &self.entries * z,
            weight: self.weight.clone(),
            label: self.label.clone(),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self {
            entries: linalg::inverse(&self.entries, &self.label)?,
            weight: self.weight.clone(),
            label: format!("{}⁻¹", self.label),
        })
    }

    /// Commutator norm `‖[A, B]‖ / (‖A‖‖B‖)` in the frame.
    pub fn commutator_defect(&self, other: &Self) -> Result<f64> {
        self.check_weight(other)?;
        let (a, b) = (self.frame(), other.frame());
        let scale = linalg::op_norm(&a) * linalg::op_norm(&b);
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(linalg::op_norm(&(&a * &b - &b * &a)) / scale)
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        let defect = self.self_adjoint_defect();
        if defect > 1e-10 {
            return Err(Error::NotSelfAdjoint { defect });
        }
        let (eigenvalues, frame_vectors) = linalg::hermitian_eigen(&self.frame());
        let inv: Vec<f64> = self.weight.sqrt().iter().map(|v| 1.0 / v).collect();
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors: linalg::scale_rows(&frame_vectors, &inv),
            frame_vectors,
            weight: self.weight.clone(),
        })
    }

    pub fn to_json(&self) -> OperatorJson {
        let n = self.n();
        OperatorJson {
            label: self.label.clone(),
            n,
            weight: self.weight.values().to_vec(),
            re: (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)].im).collect()).collect(),
        }
    }

    pub fn from_json(json: &OperatorJson) -> Result<Self> {
        let n = json.n;
        if json.re.len() != n || json.im.len() != n || json.re.iter().chain(&json.im).any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: json.re.len(),
            });
        }
        let entries = CMat::from_fn(n, n, |i, j| C64::new(json.re[i][j], json.im[i][j]));
        Self::new(entries, WeightVector::new(json.weight.clone(), 0.0)?, json.label.clone())
    }
}

/// Serialized operator container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub label: String,
    pub n: usize,
    pub weight: Vec<f64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Eigendecomposition of a self-adjoint weighted operator. Eigenvectors are
/// orthonormal for the weighted inner product.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    frame_vectors: CMat,
    weight: WeightVector,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn weight(&self) -> &WeightVector {
        &self.weight
    }

    /// `f(A) = V f(Λ) V†_w` for complex-valued `f`.
    pub fn apply_complex<F>(&self, f: F, label: &str) -> Result<WeightedOperator>
    where
        F: Fn(f64) -> C64,
    {
        let mut values = Vec::with_capacity(self.eigenvalues.len());
        for &lambda in &self.eigenvalues {
            let v = f(lambda);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::SingularOnSpectrum { eigenvalue: lambda });
            }
            values.push(v);
        }
        let mut scaled = self.frame_vectors.clone();
        for (j, v) in values.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= *v;
        }
        let frame = scaled * self.frame_vectors.adjoint();
        WeightedOperator::from_frame(&frame, self.weight.clone(), label)
    }

    pub fn apply<F>(&self, f: F, label: &str) -> Result<WeightedOperator>
    where
        F: Fn(f64) -> f64,
    {
        self.apply_complex(|x| c(f(x)), label)
    }
}

pub fn func_calculus<F>(a: &WeightedOperator, f: F) -> Result<WeightedOperator>
where
    F: Fn(f64) -> f64,
{
    a.spectral()?.apply(f, &format!("f({})", a.label()))
}

pub fn func_calculus_complex<F>(a: &WeightedOperator, f: F) -> Result<WeightedOperator>
where
    F: Fn(f64) -> C64,
{
    a.spectral()?.apply_complex(f, &format!("f({})", a.label()))
}

/// `A†_w = W⁻¹ A* W`.
pub fn weighted_adjoint(a: &WeightedOperator) -> WeightedOperator {
    let w = a.weight().values();
    let inv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
    let entries = linalg::scale_cols(&linalg::scale_rows(&a.entries().adjoint(), &inv), w);
    WeightedOperator {
        entries,
        weight: a.weight().clone(),
        label: format!("{}†", a.label()),
    }
}

/// Periodic three-point stencil `(a u)_j = d_j u_j + p_j u_{j+1} + m_j u_{j−1}`.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl Stencil {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[C64], out: &mut [C64]) {
        let n = self.n();
        for j in 0..n {
            let up = u[(j + 1) % n];
            let down = u[(j + n - 1) % n];
            out[j] = u[j] * self.diag[j] + up * self.upper[j] + down * self.lower[j];
        }
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.n();
        let mut m = CMat::zeros(n, n);
        for j in 0..n {
            m[(j, j)] += c(self.diag[j]);
            m[(j, (j + 1) % n)] += c(self.upper[j]);
            m[(j, (j + n - 1) % n)] += c(self.lower[j]);
        }
        m
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn spectral_bound(&self) -> f64 {
        (0..self.n())
            .map(|j| self.diag[j] + self.upper[j].abs() + self.lower[j].abs())
            .fold(0.0, f64::max)
    }
}

/// Stencil and weight of `−(N√h)⁻¹ ∂_x (N√h·h⁻¹) ∂_x + V` at time `t`.
/// The weight is `N√h·Δx`; with unit lapse it equals the surface weight.
pub fn spatial_stencil(profile: &MetricProfile, grid: &Grid, t: f64) -> Result<(Stencil, WeightVector)> {
    let n = grid.n_points();
    let dx = grid.spacing();
    let mut rho = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for &x in grid.coordinates() {
        let h = profile.h_checked(t, x)?;
        rho.push(profile.lapse_checked(x)? * h.sqrt());
        potential.push(profile.potential_checked(t, x)?);
    }
    let kappa = grid
        .midpoints()
        .iter()
        .map(|&x| Ok(profile.lapse_checked(x)? / profile.h_checked(t, x)?.sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    for j in 0..n {
        let kp = kappa[j];
        let km = kappa[(j + n - 1) % n];
        let s = 1.0 / (rho[j] * dx * dx);
        upper[j] = -kp * s;
        lower[j] = -km * s;
        diag[j] = (kp + km) * s + potential[j];
    }
    let weight = WeightVector::new(rho.iter().map(|r| r * dx).collect(), t)?;
    Ok((Stencil { diag, upper, lower }, weight))
}

pub fn build_spatial_operator(profile: &MetricProfile, grid: &Grid, t: f64) -> Result<WeightedOperator> {
    let (stencil, weight) = spatial_stencil(profile, grid, t)?;
    let op = WeightedOperator::new(stencil.to_dense(), weight, format!("a({t})"))?;
    let min_eigenvalue = op.min_eigenvalue();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(op)
}

/// `ε = a^{1/2}`, with the positivity of `a` asserted.
pub fn sqrt_positive(a: &WeightedOperator) -> Result<WeightedOperator> {
    let spec = a.spectral()?;
    if let Some(&min_eigenvalue) = spec.eigenvalues().first() {
        if !(min_eigenvalue > 0.0) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
    }
    Ok(spec.apply(f64::sqrt, "ε")?)
}

/// Discrete dispersion of the flat stencil, `(4/Δx²)sin²(kΔx/2)/h + m²`.
pub fn flat_dispersion(k: f64, dx: f64, h: f64, mass_sq: f64) -> f64 {
    4.0 / (dx * dx) * (0.5 * k * dx).sin().powi(2) / h + mass_sq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, fourier_mode, weight_at};
    use crate::linalg::{frobenius, CVec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_weighted(n: usize, seed: &[f64]) -> (WeightedOperator, WeightVector) {
        let w = WeightVector::new((0..n).map(|j| 0.5 + seed[j % seed.len()].abs()).collect(), 0.0).unwrap();
        let m = CMat::from_fn(n, n, |i, j| {
            C64::new(seed[(i * n + j) % seed.len()], seed[(i + 3 * j + 1) % seed.len()])
        });
        (WeightedOperator::new(m, w.clone(), "R").unwrap(), w)
    }

    fn positive_operator(n: usize, seed: &[f64]) -> WeightedOperator {
        let (r, w) = random_weighted(n, seed);
        let f = r.frame();
        let h = &f * f.adjoint() + linalg::identity(n) * c(0.5);
        WeightedOperator::from_frame(&h, w, "P").unwrap()
    }

    #[test]
    fn flat_operator_has_discrete_fourier_spectrum() {
        let n = 16;
        let g = build_grid(n, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::flat(1.0).unwrap(), &g, 0.0).unwrap();
        for k in -3i64..=3 {
            let v = fourier_mode(&g, k);
            let av = a.entries() * &v;
            let lambda = flat_dispersion(k as f64, g.spacing(), 1.0, 1.0);
            assert!((av - &v * c(lambda)).norm() < 1e-11);
            let dx = g.spacing();
            assert!((lambda - (k * k) as f64 - 1.0).abs() <= (k as f64).powi(4) * dx * dx / 12.0 + 1e-12);
        }
        assert!(a.self_adjoint_defect() < 1e-14);
    }

    #[test]
    fn zero_mode_gives_mass_floor() {
        let g = build_grid(4, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::flat(1.0).unwrap(), &g, 0.0).unwrap();
        assert!((a.min_eigenvalue() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_metric_four_matches_brute_force_eigensolve() {
        let n = 12;
        let g = build_grid(n, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::constant(4.0, 1.0).unwrap(), &g, 0.0).unwrap();
        // brute force: eigenvalues of the raw coordinate matrix
        let raw = a.entries().map(|z| z.re);
        let mut brute: Vec<f64> = raw.complex_eigenvalues().iter().map(|z| z.re).collect();
        brute.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = (0..n)
            .map(|j| flat_dispersion(linalg::signed_wavenumber(j, n) as f64, g.spacing(), 4.0, 1.0))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (b, e) in brute.iter().zip(&expected) {
            assert!((b - e).abs() < 1e-11);
        }
        // low modes approach k²/4 + 1
        assert!((expected[1] - 1.25).abs() < 1e-2);
    }

    #[test]
    fn bumpy_operator_is_self_adjoint_for_its_weight() {
        let g = build_grid(24, 2.0 * PI).unwrap();
        let p = MetricProfile::gaussian_bump(0.4, 1.0, 2.0, 0.5).unwrap();
        let a = build_spatial_operator(&p, &g, 0.3).unwrap();
        assert!(a.self_adjoint_defect() < 1e-13);
        assert!(a.weight().matches(&weight_at(&p, &g, 0.3).unwrap(), 1e-15));
        assert!(a.min_eigenvalue() >= 0.5 - 1e-12);
    }

    #[test]
    fn lapse_enters_weight_and_conductance() {
        let g = build_grid(16, 2.0 * PI).unwrap();
        let p = MetricProfile::flat(1.0).unwrap().with_lapse(|x| 1.0 + 0.5 * x.cos());
        let a = build_spatial_operator(&p, &g, 0.0).unwrap();
        assert!(a.self_adjoint_defect() < 1e-13);
        assert!((a.weight().values()[0] - 1.5 * g.spacing()).abs() < 1e-15);
    }

    #[test]
    fn functional_calculus_examples() {
        let w = WeightVector::uniform(1, 1.0);
        let four = WeightedOperator::diagonal(&[4.0], w.clone(), "4").unwrap();
        let two = func_calculus(&four, f64::sqrt).unwrap();
        assert!((two.entries()[(0, 0)] - c(2.0)).norm() < 1e-15);
        let id = func_calculus(&four, |x| x).unwrap();
        assert!((id.entries()[(0, 0)] - c(4.0)).norm() < 1e-14);

        let half = WeightedOperator::diagonal(&[0.5], w.clone(), "h").unwrap();
        let t = func_calculus(&half, |x| (x * 3f64.ln()).tanh()).unwrap();
        assert!((t.entries()[(0, 0)] - c(0.5)).norm() < 1e-15);

        let zero = WeightedOperator::diagonal(&[0.0, 1.0], WeightVector::uniform(2, 1.0), "z").unwrap();
        match func_calculus(&zero, |x| 1.0 / x.tanh()) {
            Err(Error::SingularOnSpectrum { eigenvalue }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn adjoint_examples() {
        let g = build_grid(8, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::gaussian_bump(0.3, 1.0, 1.0, 1.0).unwrap(), &g, 0.2).unwrap();
        assert!(frobenius(&(weighted_adjoint(&a).entries() - a.entries())) < 1e-12 * frobenius(a.entries()));

        let m = CMat::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.3, j as f64 - 1.1 * i as f64));
        let u = WeightedOperator::new(m.clone(), WeightVector::uniform(3, 0.7), "M").unwrap();
        assert!(frobenius(&(weighted_adjoint(&u).entries() - m.adjoint())) < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let g = build_grid(6, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::flat(2.0).unwrap(), &g, 0.0).unwrap();
        let text = serde_json::to_string(&a.to_json()).unwrap();
        let back: OperatorJson = serde_json::from_str(&text).unwrap();
        let b = WeightedOperator::from_json(&back).unwrap();
        assert_eq!(a.entries(), b.entries());
        assert_eq!(a.label(), b.label());
    }

    #[test]
    fn spectral_decomposition_is_deterministic() {
        let g = build_grid(16, 2.0 * PI).unwrap();
        let a = build_spatial_operator(&MetricProfile::gaussian_bump(0.3, 1.0, 2.0, 1.0).unwrap(), &g, 0.1).unwrap();
        let s1 = a.spectral().unwrap();
        let s2 = a.spectral().unwrap();
        assert_eq!(s1.eigenvalues(), s2.eigenvalues());
        assert_eq!(s1.eigenvectors(), s2.eigenvectors());
        let v = s1.eigenvectors();
        let gram = v.adjoint() * linalg::scale_rows(v, a.weight().values());
        assert!(frobenius(&(gram - linalg::identity(16))) < 1e-12);
        let rebuilt = s1.apply(|x| x, "a").unwrap();
        assert!(linalg::op_norm(&(rebuilt.frame() - a.frame())) < 1e-10 * a.norm());
    }

    #[test]
    fn stencil_apply_matches_dense() {
        let g = build_grid(10, 3.0).unwrap();
        let p = MetricProfile::gaussian_bump(0.5, 1.0, 2.0, 1.0).unwrap();
        let (st, _) = spatial_stencil(&p, &g, 0.4).unwrap();
        let u: Vec<C64> = (0..10).map(|j| C64::new(j as f64, 1.0 - j as f64 * 0.3)).collect();
        let mut out = vec![C64::new(0.0, 0.0); 10];
        st.apply(&u, &mut out);
        let dense = st.to_dense() * CVec::from_vec(u);
        for j in 0..10 {
            assert!((dense[j] - out[j]).norm() < 1e-12);
        }
        let a = WeightedOperator::new(st.to_dense(), WeightVector::uniform(10, 1.0), "a").unwrap();
        assert!(st.spectral_bound() >= linalg::op_norm(&a.entries().clone()) * 0.999);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adjoint_pairs_inner_products(seed in prop::collection::vec(-1.0f64..1.0, 30), n in 2usize..6) {
            let (a, w) = random_weighted(n, &seed);
            let u = CVec::from_fn(n, |j, _| C64::new(seed[j], seed[j + 10]));
            let v = CVec::from_fn(n, |j, _| C64::new(seed[j + 5], -seed[j + 15]));
            let lhs = crate::grid::inner_product(&(a.entries() * &u), &v, &w).unwrap();
            let adj = weighted_adjoint(&a);
            let rhs = crate::grid::inner_product(&u, &(adj.entries() * &v), &w).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            let twice = weighted_adjoint(&adj);
            prop_assert!(frobenius(&(twice.entries() - a.entries())) < 1e-12);
        }

        #[test]
        fn sqrt_squares_back(seed in prop::collection::vec(-1.0f64..1.0, 40), n in 1usize..7) {
            let p = positive_operator(n, &seed);
            let r = sqrt_positive(&p).unwrap();
            let sq = r.compose(&r).unwrap();
            prop_assert!(linalg::op_norm(&(sq.frame() - p.frame())) <= 1e-10 * p.norm());
            prop_assert!(r.commutator_defect(&p).unwrap() < 1e-10);
        }

        #[test]
        fn calculus_is_multiplicative(seed in prop::collection::vec(-1.0f64..1.0, 40), n in 1usize..7) {
            let p = positive_operator(n, &seed);
            let spec = p.spectral().unwrap();
            let f = spec.apply(|x| (0.3 * x).exp(), "f").unwrap();
            let g = spec.apply(|x| 1.0 / (1.0 + x), "g").unwrap();
            let fg = spec.apply(|x| (0.3 * x).exp() / (1.0 + x), "fg").unwrap();
            let prod = f.compose(&g).unwrap();
            prop_assert!(linalg::op_norm(&(prod.frame() - fg.frame())) <= 1e-10 * fg.norm());
        }
    }
}
