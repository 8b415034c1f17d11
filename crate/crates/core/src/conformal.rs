//! Conformal rescalings `g̃ = c²g` in spacetime dimension 2.
//!
//! For general dimension `n` the Cauchy map is
//! `U f = (c^{1−n/2} f₀, c^{−n/2} f₁)` and spacetime covariances transform as
//! `Λ̃± = c^{1−n/2} Λ± c^{−1−n/2}`; here `n = 2` throughout.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, MetricProfile, WeightVector};
use crate::linalg::{self, CMat};
use crate::states::{doubled_frame, CovariancePair};

pub const DIMENSION: usize = 2;

type FactorFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ConformalFactor {
    c: FactorFn,
    label: String,
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalFactor").field("label", &self.label).finish()
    }
}

impl ConformalFactor {
    pub fn new<F>(label: &str, c: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            c: Arc::new(c),
            label: label.to_string(),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(&format!("c≡{value}"), move |_, _| value)
    }

    /// `c = 1 + a cos(x)`.
    pub fn cosine(amplitude: f64) -> Self {
        Self::new(&format!("1+{amplitude}cos(x)"), move |_, x| 1.0 + amplitude * x.cos())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        (self.c)(t, x)
    }

    /// Values at the grid nodes; fails if any is not positive.
    pub fn at_nodes(&self, grid: &Grid, t: f64) -> Result<Vec<f64>> {
        grid.coordinates()
            .iter()
            .map(|&x| {
                let v = self.value(t, x);
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "conformal factor must be positive, got {v} at (t, x) = ({t}, {x})"
                    )))
                }
            })
            .collect()
    }

    /// Static rescaled problem: `h̃ = c²h`, lapse `c`, potential `V/c²`.
    /// Requires a static profile with unit lapse and a time-independent factor.
    pub fn rescale_static(&self, profile: &MetricProfile, grid: &Grid) -> Result<MetricProfile> {
        if !profile.is_time_independent() || !profile.has_unit_lapse() {
            return Err(Error::InvalidParameter(
                "rescaling needs a static profile with unit lapse".into(),
            ));
        }
        let (p1, p2) = (profile.clone(), profile.clone());
        let (c1, c2, c3) = (self.c.clone(), self.c.clone(), self.c.clone());
        let c_max = self.at_nodes(grid, 0.0)?.into_iter().fold(0.0, f64::max);
        let floor = profile.mass_sq() / (c_max * c_max);
        Ok(MetricProfile::new("conformal-rescaled", floor, move |t, x| {
            let c = c1(0.0, x);
            c * c * p1.h(t, x)
        })?
        .static_in_time()
        .with_lapse(move |x| c2(0.0, x))
        .with_potential(move |t, x| {
            let c = c3(0.0, x);
            p2.potential(t, x) / (c * c)
        }))
    }
}

/// `Λ̃±(x, x') = Λ±(x, x') c(x')⁻²`: right argument at `(t', x'_j)`.
pub fn transform_spacetime_covariance(kernel: &CMat, factor: &ConformalFactor, grid: &Grid, t_right: f64) -> Result<CMat> {
    let c = factor.at_nodes(grid, t_right)?;
    let scale: Vec<f64> = c.iter().map(|v| 1.0 / (v * v)).collect();
    Ok(linalg::scale_cols(kernel, &scale))
}

/// `λ̃± = (U*)⁻¹λ±U⁻¹` with `U = diag(1, c⁻¹)`, as forms; the transformed
/// pair carries the surface weight `c·w`.
pub fn transform_cauchy_covariances(cov: &CovariancePair, c: &[f64]) -> Result<CovariancePair> {
    let n = cov.n();
    if c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.len() });
    }
    if let Some(bad) = c.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParameter(format!("conformal factor must be positive, got {bad}")));
    }
    let new_weight = cov.weight().scaled(c);
    // λ̃ = W̃₂⁻¹ U⁻ᴴ W₂ λ U⁻¹ with U⁻¹ = diag(1, c)
    let mut left = vec![0.0; 2 * n];
    let mut right = vec![1.0; 2 * n];
    for j in 0..n {
        left[j] = 1.0 / c[j];
        left[n + j] = 1.0;
        right[n + j] = c[j];
    }
    let map = |m: &CMat| linalg::scale_cols(&linalg::scale_rows(m, &left), &right);
    CovariancePair::new(
        map(cov.lambda_plus()),
        map(cov.lambda_minus()),
        new_weight,
        format!("conformal({})", cov.provenance()),
    )
}

/// `‖U*q̃U − q‖` in orthonormal frames of the original weight.
pub fn diagram_defect(weight: &WeightVector, c: &[f64]) -> Result<f64> {
    let n = weight.len();
    if c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.len() });
    }
    let tilde = weight.scaled(c);
    let mut u = vec![1.0; 2 * n];
    for j in 0..n {
        u[n + j] = 1.0 / c[j];
    }
    let q_tilde_form = linalg::scale_rows(&linalg::swap_blocks(n), &tilde.doubled());
    let pulled = linalg::scale_cols(&linalg::scale_rows(&q_tilde_form, &u), &u);
    let q_form = linalg::scale_rows(&linalg::swap_blocks(n), &weight.doubled());
    // forms → frames: S₂⁻¹ F S₂⁻¹
    let inv: Vec<f64> = weight.doubled_sqrt().iter().map(|v| 1.0 / v).collect();
    let to_frame = |m: &CMat| linalg::scale_cols(&linalg::scale_rows(m, &inv), &inv);
    Ok(linalg::op_norm(&(to_frame(&pulled) - to_frame(&q_form))))
}

/// Orthonormal-frame matrix of the transformed `λ⁺`, for reporting.
pub fn transformed_frame_plus(cov: &CovariancePair) -> CMat {
    doubled_frame(cov.lambda_plus(), cov.weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::opcalc::build_spatial_operator;
    use crate::states::{purity_defect, static_reduction, vacuum_covariances, validate_state};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn flat_vacuum(n: usize, m2: f64) -> (Grid, MetricProfile, CovariancePair) {
        let grid = build_grid(n, 2.0 * PI).unwrap();
        let profile = MetricProfile::flat(m2).unwrap();
        let a = build_spatial_operator(&profile, &grid, 0.0).unwrap();
        let eps = crate::opcalc::sqrt_positive(&a).unwrap();
        (grid, profile, vacuum_covariances(&eps).unwrap())
    }

    #[test]
    fn unit_factor_is_identity() {
        let (grid, _, cov) = flat_vacuum(8, 1.0);
        let c = ConformalFactor::constant(1.0).at_nodes(&grid, 0.0).unwrap();
        let t = transform_cauchy_covariances(&cov, &c).unwrap();
        assert!(t.distance(&cov).unwrap() < 1e-15);
        let k = CMat::from_fn(8, 8, |i, j| crate::linalg::c((i * 8 + j) as f64));
        let tk = transform_spacetime_covariance(&k, &ConformalFactor::constant(1.0), &grid, 0.3).unwrap();
        assert_eq!(tk, k);
    }

    #[test]
    fn constant_two_quarters_spacetime_kernel() {
        let grid = build_grid(6, 2.0 * PI).unwrap();
        let k = CMat::from_fn(6, 6, |i, j| crate::linalg::c((i + 2 * j) as f64) + crate::linalg::I * (i as f64));
        let tk = transform_spacetime_covariance(&k, &ConformalFactor::constant(2.0), &grid, 0.0).unwrap();
        assert!(linalg::op_norm(&(tk - k * crate::linalg::c(0.25))) < 1e-14);
    }

    #[test]
    fn constant_two_vacuum_is_rescaled_ground_state() {
        let (grid, profile, cov) = flat_vacuum(12, 1.0);
        let factor = ConformalFactor::constant(2.0);
        let c = factor.at_nodes(&grid, 0.0).unwrap();
        let t = transform_cauchy_covariances(&cov, &c).unwrap();
        let rescaled = factor.rescale_static(&profile, &grid).unwrap();
        let ground = static_reduction(&rescaled, &grid).unwrap().ground;
        assert!(t.weight().matches(ground.weight(), 1e-14));
        assert!(t.distance(&ground).unwrap() < 1e-10 * ground.norm());
        assert!(validate_state(&t).valid);
        assert!(purity_defect(&t).unwrap() < 1e-10);
        assert!(diagram_defect(cov.weight(), &c).unwrap() < 1e-12);
    }

    #[test]
    fn cosine_factor_keeps_validity_and_purity() {
        let (grid, profile, cov) = flat_vacuum(16, 1.0);
        let factor = ConformalFactor::cosine(0.5);
        let c = factor.at_nodes(&grid, 0.0).unwrap();
        let t = transform_cauchy_covariances(&cov, &c).unwrap();
        assert!(validate_state(&t).valid);
        assert!((purity_defect(&t).unwrap() - purity_defect(&cov).unwrap()).abs() < 1e-10);
        let ground = static_reduction(&factor.rescale_static(&profile, &grid).unwrap(), &grid).unwrap().ground;
        assert!(t.distance(&ground).unwrap() < 1e-9 * ground.norm());
    }

    #[test]
    fn transformed_two_point_difference_is_causal() {
        let (grid, profile, _) = flat_vacuum(10, 1.0);
        let eps = crate::opcalc::sqrt_positive(&build_spatial_operator(&profile, &grid, 0.0).unwrap()).unwrap();
        let factor = ConformalFactor::cosine(0.3);
        for t in [-0.7, 0.0, 0.4, 1.9] {
            let tr = |m: &CMat| transform_spacetime_covariance(m, &factor, &grid, 0.0).unwrap();
            let lp = tr(crate::propagators::two_point_static(&eps, t, crate::propagators::Sign::Plus).unwrap().entries());
            let lm = tr(crate::propagators::two_point_static(&eps, t, crate::propagators::Sign::Minus).unwrap().entries());
            let g = tr(crate::propagators::causal(&eps, t).unwrap().entries());
            assert!(linalg::op_norm(&(lp - lm - g * crate::linalg::I)) < 1e-13);
        }
    }

    #[test]
    fn rejects_non_positive_factor() {
        let grid = build_grid(8, 2.0 * PI).unwrap();
        assert!(ConformalFactor::cosine(1.5).at_nodes(&grid, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn diagram_commutes(ws in proptest::collection::vec(0.1f64..3.0, 3..8), seed in 0.2f64..3.0) {
            let n = ws.len();
            let w = WeightVector::new(ws, 0.0).unwrap();
            let c: Vec<f64> = (0..n).map(|j| seed + (j as f64).sin().abs()).collect();
            prop_assert!(diagram_defect(&w, &c).unwrap() < 1e-12);
        }
    }
}
