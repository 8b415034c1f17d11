//! Closed-form propagator kernels of an ultrastatic model `∂_t² + ε²`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{C64, I};
use crate::opcalc::{SpectralDecomposition, WeightedOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Retarded,
    Advanced,
    Causal,
    Feynman,
    Euclidean,
    TwoPointPlus,
    TwoPointMinus,
}

impl KernelKind {
    pub const ALL: [KernelKind; 7] = [
        KernelKind::Retarded,
        KernelKind::Advanced,
        KernelKind::Causal,
        KernelKind::Feynman,
        KernelKind::Euclidean,
        KernelKind::TwoPointPlus,
        KernelKind::TwoPointMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Retarded => "retarded",
            KernelKind::Advanced => "advanced",
            KernelKind::Causal => "causal",
            KernelKind::Feynman => "feynman",
            KernelKind::Euclidean => "euclidean",
            KernelKind::TwoPointPlus => "two_point_plus",
            KernelKind::TwoPointMinus => "two_point_minus",
        }
    }

    /// Weight of `δ(t)` in `(±∂_t² + ε²)K`; the Euclidean kind uses `−∂_s²`.
    pub fn delta_weight(self) -> f64 {
        match self {
            KernelKind::Retarded | KernelKind::Advanced | KernelKind::Feynman | KernelKind::Euclidean => 1.0,
            _ => 0.0,
        }
    }

    /// Kernel value on the eigenvalue `x` of `ε`, with `θ(0) = 1`.
    pub fn scalar(self, x: f64, t: f64) -> C64 {
        match self {
            KernelKind::Retarded => {
                if t >= 0.0 {
                    C64::new((x * t).sin() / x, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            KernelKind::Advanced => {
                if t <= 0.0 {
                    C64::new(-(x * t).sin() / x, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            KernelKind::Causal => C64::new((x * t).sin() / x, 0.0),
            KernelKind::Feynman => C64::from_polar(1.0, x * t.abs()) / (2.0 * I * x),
            KernelKind::Euclidean => C64::new((-x * t.abs()).exp() / (2.0 * x), 0.0),
            KernelKind::TwoPointPlus => C64::from_polar(1.0, x * t) / (2.0 * x),
            KernelKind::TwoPointMinus => C64::from_polar(1.0, -x * t) / (2.0 * x),
        }
    }
}

/// Lazily evaluated kernel family sharing one spectral decomposition of `ε`.
#[derive(Debug, Clone)]
pub struct KernelFamily {
    kind: KernelKind,
    spectrum: SpectralDecomposition,
}

impl KernelFamily {
    pub fn new(eps: &WeightedOperator, kind: KernelKind) -> Result<Self> {
        let spectrum = eps.spectral()?;
        if let Some(&min_eigenvalue) = spectrum.eigenvalues().first() {
            if !(min_eigenvalue > 0.0) {
                return Err(Error::NotPositive { min_eigenvalue });
            }
        }
        Ok(Self { kind, spectrum })
    }

    pub fn with_kind(&self, kind: KernelKind) -> Self {
        Self {
            kind,
            spectrum: self.spectrum.clone(),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eps_min(&self) -> f64 {
        self.spectrum.eigenvalues()[0]
    }

    pub fn eps_max(&self) -> f64 {
        *self.spectrum.eigenvalues().last().unwrap()
    }

    pub fn evaluate(&self, t: f64) -> Result<WeightedOperator> {
        let kind = self.kind;
        self.spectrum
            .apply_complex(|x| kind.scalar(x, t), &format!("{}({t})", kind.name()))
    }

    /// Values on each eigenvalue of `ε`, in ascending eigenvalue order.
    pub fn mode_values(&self, t: f64) -> Vec<C64> {
        self.spectrum
            .eigenvalues()
            .iter()
            .map(|&x| self.kind.scalar(x, t))
            .collect()
    }
}

pub fn retarded_advanced(eps: &WeightedOperator, t: f64) -> Result<(WeightedOperator, WeightedOperator)> {
    let ret = KernelFamily::new(eps, KernelKind::Retarded)?;
    Ok((ret.evaluate(t)?, ret.with_kind(KernelKind::Advanced).evaluate(t)?))
}

pub fn causal(eps: &WeightedOperator, t: f64) -> Result<WeightedOperator> {
    KernelFamily::new(eps, KernelKind::Causal)?.evaluate(t)
}

pub fn feynman(eps: &WeightedOperator, t: f64) -> Result<WeightedOperator> {
    KernelFamily::new(eps, KernelKind::Feynman)?.evaluate(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

pub fn two_point_static(eps: &WeightedOperator, t: f64, sign: Sign) -> Result<WeightedOperator> {
    let kind = match sign {
        Sign::Plus => KernelKind::TwoPointPlus,
        Sign::Minus => KernelKind::TwoPointMinus,
    };
    KernelFamily::new(eps, kind)?.evaluate(t)
}

pub fn euclidean(eps: &WeightedOperator, s: f64) -> Result<WeightedOperator> {
    KernelFamily::new(eps, KernelKind::Euclidean)?.evaluate(s)
}

/// `(2ε)⁻¹ exp(−ε√(s² − i0))`, the Euclidean kernel continued to complex `s`.
/// On the imaginary axis the `−i0` prescription selects the branch for which
/// `i⁻¹G_E(it) = G_F(t)`.
pub fn euclidean_scalar_complex(x: f64, s: C64) -> C64 {
    let s2 = s * s;
    let root = if s2.im == 0.0 && s2.re < 0.0 {
        C64::new(0.0, -(-s2.re).sqrt())
    } else {
        let r = s2.sqrt();
        if r.re < 0.0 {
            -r
        } else {
            r
        }
    };
    (-root * x).exp() / (2.0 * x)
}

pub fn euclidean_complex(eps: &WeightedOperator, s: C64) -> Result<WeightedOperator> {
    let family = KernelFamily::new(eps, KernelKind::Euclidean)?;
    family
        .spectrum()
        .apply_complex(|x| euclidean_scalar_complex(x, s), "G_E")
}

/// Largest relative defect of `G_F = i⁻¹Λ⁺ + G_adv` and `G_F = i⁻¹Λ⁻ + G_ret`.
pub fn verify_feynman_identity(eps: &WeightedOperator, t_samples: &[f64]) -> Result<f64> {
    let fam = KernelFamily::new(eps, KernelKind::Feynman)?;
    let mut worst: f64 = 0.0;
    for &t in t_samples {
        let gf = fam.evaluate(t)?;
        let lp = fam.with_kind(KernelKind::TwoPointPlus).evaluate(t)?;
        let lm = fam.with_kind(KernelKind::TwoPointMinus).evaluate(t)?;
        let ret = fam.with_kind(KernelKind::Retarded).evaluate(t)?;
        let adv = fam.with_kind(KernelKind::Advanced).evaluate(t)?;
        let scale = gf.norm();
        let d1 = gf.sub(&lp.scale(-I))?.sub(&adv)?.norm();
        let d2 = gf.sub(&lm.scale(-I))?.sub(&ret)?.norm();
        worst = worst.max(d1.max(d2) / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeResidual {
    /// Sup-norm of the discrete residual away from `t = 0`.
    pub off_origin: f64,
    /// Measured weight of the discrete delta at the origin, worst mode.
    pub delta_weight: f64,
    pub delta_weight_error: f64,
}

impl PdeResidual {
    pub fn total(&self) -> f64 {
        self.off_origin + self.delta_weight_error
    }
}

/// Locates the origin node of a uniform grid and returns `(Δt, index)`.
pub fn uniform_grid_origin(t_grid: &[f64]) -> Result<(f64, usize)> {
    if t_grid.len() < 3 {
        return Err(Error::CoarseTimeGrid("need at least three t samples".into()));
    }
    let dt = (t_grid[t_grid.len() - 1] - t_grid[0]) / (t_grid.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::CoarseTimeGrid("t grid must be increasing".into()));
    }
    if t_grid
        .windows(2)
        .any(|p| ((p[1] - p[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::CoarseTimeGrid("t grid must be uniform".into()));
    }
    let origin = t_grid
        .iter()
        .position(|t| t.abs() <= 1e-9 * dt)
        .ok_or_else(|| Error::CoarseTimeGrid("t grid must contain t = 0 as a node".into()))?;
    if origin == 0 || origin == t_grid.len() - 1 {
        return Err(Error::CoarseTimeGrid("t grid must bracket t = 0".into()));
    }
    Ok((dt, origin))
}

/// Applies `∂_t² + ε²` (or `−∂_s² + ε²` for the Euclidean kind) by central
/// differences, mode by mode in the eigenbasis of `ε`.
pub fn discrete_pde_residual(kernel: &KernelFamily, t_grid: &[f64]) -> Result<PdeResidual> {
    let (dt, origin) = uniform_grid_origin(t_grid)?;
    let eps_max = kernel.eps_max();
    let max_dt = 2.0 * PI / (8.0 * eps_max);
    if dt > max_dt {
        return Err(Error::CoarseTimeGrid(format!(
            "Δt = {dt} exceeds {max_dt}, fewer than 8 points per period of the top eigenfrequency"
        )));
    }
    let sign = if kernel.kind() == KernelKind::Euclidean { -1.0 } else { 1.0 };
    let expected = kernel.kind().delta_weight();
    let samples: Vec<Vec<C64>> = t_grid.iter().map(|&t| kernel.mode_values(t)).collect();
    let mut off_origin: f64 = 0.0;
    let mut delta_weight = expected;
    let mut delta_weight_error: f64 = 0.0;
    for i in 1..t_grid.len() - 1 {
        for (m, &x) in kernel.spectrum().eigenvalues().iter().enumerate() {
            let d2 = (samples[i + 1][m] - samples[i][m] * 2.0 + samples[i - 1][m]) / (dt * dt);
            let r = d2 * sign + samples[i][m] * (x * x);
            if i == origin {
                let weight = r * dt;
                let err = (weight - expected).norm();
                if err > delta_weight_error {
                    delta_weight_error = err;
                    delta_weight = weight.re;
                }
            } else {
                off_origin = off_origin.max(r.norm());
            }
        }
    }
    Ok(PdeResidual {
        off_origin,
        delta_weight,
        delta_weight_error,
    })
}

pub fn symmetric_grid(half_width: f64, dt: f64) -> Vec<f64> {
    let k = (half_width / dt).round() as i64;
    (-k..=k).map(|j| j as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, MetricProfile, WeightVector};
    use crate::linalg::c;
    use crate::opcalc::{build_spatial_operator, sqrt_positive};
    use proptest::prelude::*;

    fn scalar(e: f64) -> WeightedOperator {
        WeightedOperator::diagonal(&[e], WeightVector::uniform(1, 1.0), "ε").unwrap()
    }

    fn value(op: &WeightedOperator) -> C64 {
        op.entries()[(0, 0)]
    }

    fn eps_123() -> WeightedOperator {
        WeightedOperator::diagonal(&[1.0, 2.0, 3.0], WeightVector::uniform(3, 0.4), "ε").unwrap()
    }

    #[test]
    fn retarded_examples() {
        let (r, a) = retarded_advanced(&scalar(1.0), PI / 2.0).unwrap();
        assert!((value(&r) - c(1.0)).norm() < 1e-15);
        assert!(value(&a).norm() < 1e-15);
        let (r, _) = retarded_advanced(&scalar(1.0), -0.5).unwrap();
        assert_eq!(value(&r), c(0.0));
        let (r, _) = retarded_advanced(&scalar(2.0), PI / 4.0).unwrap();
        assert!((value(&r) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn causal_examples() {
        let e = eps_123();
        assert!(causal(&e, 0.0).unwrap().norm() < 1e-15);
        let h = 1e-6;
        let d = causal(&e, h).unwrap().sub(&causal(&e, -h).unwrap()).unwrap().scale(c(0.5 / h));
        assert!(d.sub(&WeightedOperator::identity(e.weight().clone())).unwrap().norm() < 1e-9);
        let g = causal(&e, 0.7).unwrap();
        assert!(g.add(&causal(&e, -0.7).unwrap()).unwrap().norm() < 1e-15);
        assert!((value(&causal(&scalar(1.0), PI / 2.0).unwrap()) - c(1.0)).norm() < 1e-15);
        for t in [-1.3, 0.0, 0.4, 2.0] {
            let (r, a) = retarded_advanced(&e, t).unwrap();
            assert!(causal(&e, t).unwrap().sub(&r.sub(&a).unwrap()).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn feynman_examples() {
        assert!((value(&feynman(&scalar(1.0), 0.0).unwrap()) - 1.0 / (2.0 * I)).norm() < 1e-15);
        assert!((value(&feynman(&scalar(2.0), PI).unwrap()) - 1.0 / (4.0 * I)).norm() < 1e-14);
        let lp = two_point_static(&scalar(1.0), 1.0, Sign::Plus).unwrap();
        assert!((value(&feynman(&scalar(1.0), 1.0).unwrap()) - value(&lp) / I).norm() < 1e-15);
    }

    #[test]
    fn two_point_examples() {
        let e = eps_123();
        let half_inv = crate::opcalc::func_calculus(&e, |x| 0.5 / x).unwrap();
        assert!(two_point_static(&e, 0.0, Sign::Plus).unwrap().sub(&half_inv).unwrap().norm() < 1e-15);
        let t = 0.9;
        let diff = two_point_static(&e, t, Sign::Plus)
            .unwrap()
            .sub(&two_point_static(&e, t, Sign::Minus).unwrap())
            .unwrap()
            .scale(-I);
        assert!(diff.sub(&causal(&e, t).unwrap()).unwrap().norm() < 1e-15);
        assert!((value(&two_point_static(&scalar(1.0), PI, Sign::Plus).unwrap()) + 0.5).norm() < 1e-15);
    }

    #[test]
    fn feynman_identity_examples() {
        assert!(verify_feynman_identity(&eps_123(), &[-1.0, 0.0, 1.0]).unwrap() < 1e-12);
        assert!(verify_feynman_identity(&scalar(1.0), &[1.0]).unwrap() < 1e-15);
        assert!(verify_feynman_identity(&scalar(1.0), &[-1.0]).unwrap() < 1e-15);
    }

    #[test]
    fn euclidean_continuation() {
        let e = eps_123();
        for k in 0..20 {
            let t = -3.0 + 0.31 * k as f64;
            let ge = euclidean_complex(&e, C64::new(0.0, t)).unwrap().scale(-I);
            assert!(ge.sub(&feynman(&e, t).unwrap()).unwrap().norm() < 1e-14);
        }
        assert!((value(&euclidean(&scalar(1.0), 1.0).unwrap()) - c((-1f64).exp() / 2.0)).norm() < 1e-16);
        let real = euclidean_complex(&e, c(0.8)).unwrap();
        assert!(real.sub(&euclidean(&e, 0.8).unwrap()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn pde_residual_examples() {
        let one = scalar(1.0);
        let grid = symmetric_grid(2.0, 1e-3);
        let ret = discrete_pde_residual(&KernelFamily::new(&one, KernelKind::Retarded).unwrap(), &grid).unwrap();
        assert!(ret.off_origin <= 1e-5);
        assert!(ret.delta_weight_error < 1e-3);
        let cau = discrete_pde_residual(&KernelFamily::new(&one, KernelKind::Causal).unwrap(), &grid).unwrap();
        assert!(cau.off_origin <= 1e-5 && cau.delta_weight_error <= 1e-5);
        let gf = discrete_pde_residual(&KernelFamily::new(&eps_123(), KernelKind::Feynman).unwrap(), &grid).unwrap();
        assert!((gf.delta_weight - 1.0).abs() < 1e-3);
        let ge = discrete_pde_residual(&KernelFamily::new(&eps_123(), KernelKind::Euclidean).unwrap(), &grid).unwrap();
        assert!((ge.delta_weight - 1.0).abs() < 1e-3 && ge.off_origin < 1e-4);
    }

    #[test]
    fn pde_residual_is_second_order() {
        let fam = KernelFamily::new(&eps_123(), KernelKind::Retarded).unwrap();
        let r1 = discrete_pde_residual(&fam, &symmetric_grid(1.0, 1e-2)).unwrap().off_origin;
        let r2 = discrete_pde_residual(&fam, &symmetric_grid(1.0, 5e-3)).unwrap().off_origin;
        assert!((r1 / r2 - 4.0).abs() < 0.2);
    }

    #[test]
    fn coarse_or_shifted_grids_rejected() {
        let fam = KernelFamily::new(&scalar(10.0), KernelKind::Feynman).unwrap();
        assert!(matches!(discrete_pde_residual(&fam, &symmetric_grid(2.0, 0.1)), Err(Error::CoarseTimeGrid(_))));
        let shifted: Vec<f64> = (0..50).map(|j| 0.005 + j as f64 * 0.01).collect();
        assert!(discrete_pde_residual(&fam, &shifted).is_err());
    }

    #[test]
    fn kernels_commute_with_eps() {
        let g = build_grid(12, 2.0 * PI).unwrap();
        let p = MetricProfile::gaussian_bump(0.4, 1.0, 1.0, 1.0).unwrap();
        let eps = sqrt_positive(&build_spatial_operator(&p, &g, 0.2).unwrap()).unwrap();
        for kind in KernelKind::ALL {
            let k = KernelFamily::new(&eps, kind).unwrap().evaluate(0.37).unwrap();
            assert!(k.commutator_defect(&eps).unwrap() < 1e-10, "{kind:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn causal_form_is_antisymmetric(eigs in prop::collection::vec(0.3f64..5.0, 1..5), u in prop::collection::vec(-1.0f64..1.0, 8), v in prop::collection::vec(-1.0f64..1.0, 8)) {
            // ∫∫ u(t) G(t−s) v(s) on a real sample lattice: B(u, v) = −B(v, u)
            let eps = WeightedOperator::diagonal(&eigs, WeightVector::uniform(eigs.len(), 1.0), "ε").unwrap();
            let fam = KernelFamily::new(&eps, KernelKind::Causal).unwrap();
            let ts: Vec<f64> = (0..8).map(|j| 0.3 * j as f64).collect();
            let form = |a: &[f64], b: &[f64]| -> C64 {
                let mut acc = C64::new(0.0, 0.0);
                for (i, ti) in ts.iter().enumerate() {
                    for (j, tj) in ts.iter().enumerate() {
                        acc += fam.mode_values(ti - tj).iter().sum::<C64>() * (a[i] * b[j]);
                    }
                }
                acc
            };
            prop_assert!((form(&u, &v) + form(&v, &u)).norm() < 1e-12);
        }

        #[test]
        fn feynman_identity_holds(eigs in prop::collection::vec(0.2f64..10.0, 1..6), t in -5.0f64..5.0) {
            let eps = WeightedOperator::diagonal(&eigs, WeightVector::uniform(eigs.len(), 0.5), "ε").unwrap();
            prop_assert!(verify_feynman_identity(&eps, &[t]).unwrap() < 1e-12);
        }
    }
}
