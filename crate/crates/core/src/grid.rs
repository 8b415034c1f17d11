//! Periodic spatial lattice, metric profiles and weighted inner products.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

/// Evenly spaced periodic lattice on a circle of given circumference.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_points: usize,
    circumference: f64,
    spacing: f64,
    coordinates: Vec<f64>,
}

impl Grid {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn circumference(&self) -> f64 {
        self.circumference
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    /// Midpoints `x_j + Δx/2`, the points carrying stencil conductances.
    pub fn midpoints(&self) -> Vec<f64> {
        self.coordinates
            .iter()
            .map(|x| x + 0.5 * self.spacing)
            .collect()
    }
}

pub fn build_grid(n_points: usize, circumference: f64) -> Result<Grid> {
    if n_points < 4 {
        return Err(Error::GridTooSmall(n_points));
    }
    if !(circumference > 0.0) || !circumference.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "circumference must be positive, got {circumference}"
        )));
    }
    let spacing = circumference / n_points as f64;
    let coordinates = (0..n_points).map(|j| j as f64 * spacing).collect();
    Ok(Grid {
        n_points,
        circumference,
        spacing,
        coordinates,
    })
}

type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Field1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Spatial metric coefficient `h(t, x)`, static lapse `N(x)` and potential
/// `V(t, x) ≥ m²` of a 1+1 metric `−N²dt² + h dx²` with zero shift.
#[derive(Clone)]
pub struct MetricProfile {
    name: String,
    h: Field2,
    dh_dt: Option<Field2>,
    lapse: Field1,
    unit_lapse: bool,
    potential: Field2,
    mass_sq: f64,
    time_independent: bool,
    asymptotic: Option<Box<Asymptotics>>,
}

/// Time-independent limits of a profile as `t → ±∞`.
#[derive(Debug, Clone)]
pub struct Asymptotics {
    pub out_profile: MetricProfile,
    pub in_profile: MetricProfile,
    /// Decay exponent δ of `h − h_out/in`; infinite for faster than any power.
    pub decay_exponent: f64,
}

impl fmt::Debug for MetricProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricProfile")
            .field("name", &self.name)
            .field("mass_sq", &self.mass_sq)
            .field("time_independent", &self.time_independent)
            .field("unit_lapse", &self.unit_lapse)
            .finish()
    }
}

impl MetricProfile {
    /// General profile. `dh_dt` may be omitted, in which case time-dependent
    /// first-order generators cannot be assembled from it.
    pub fn new<H>(name: &str, mass_sq: f64, h: H) -> Result<Self>
    where
        H: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(mass_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass floor m² must be positive, got {mass_sq}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            h: Arc::new(h),
            dh_dt: None,
            lapse: Arc::new(|_| 1.0),
            unit_lapse: true,
            potential: Arc::new(move |_, _| mass_sq),
            mass_sq,
            time_independent: false,
            asymptotic: None,
        })
    }

    pub fn with_time_derivative<D>(mut self, dh_dt: D) -> Self
    where
        D: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.dh_dt = Some(Arc::new(dh_dt));
        self
    }

    /// Marks the profile as static; `∂_t h` is then identically zero.
    pub fn static_in_time(mut self) -> Self {
        self.time_independent = true;
        self.dh_dt = Some(Arc::new(|_, _| 0.0));
        self
    }

    pub fn with_lapse<N>(mut self, lapse: N) -> Self
    where
        N: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.lapse = Arc::new(lapse);
        self.unit_lapse = false;
        self
    }

    /// Replaces the potential; it must stay above the declared floor `m²`.
    pub fn with_potential<V>(mut self, potential: V) -> Self
    where
        V: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.potential = Arc::new(potential);
        self
    }

    pub fn with_asymptotics(mut self, asymptotics: Asymptotics) -> Self {
        self.asymptotic = Some(Box::new(asymptotics));
        self
    }

    pub fn flat(mass_sq: f64) -> Result<Self> {
        Self::constant(1.0, mass_sq)
    }

    pub fn constant(h0: f64, mass_sq: f64) -> Result<Self> {
        if !(h0 > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h0}")));
        }
        Ok(Self::new(if h0 == 1.0 { "flat" } else { "constant" }, mass_sq, move |_, _| h0)?
            .static_in_time())
    }

    /// `h = 1 + A·exp(−t²/τ²)·cos(kx)`.
    pub fn gaussian_bump(amplitude: f64, tau: f64, k: f64, mass_sq: f64) -> Result<Self> {
        if amplitude.abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gaussian-bump amplitude must satisfy |A| < 1, got {amplitude}"
            )));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let flat = Self::flat(mass_sq)?;
        Ok(Self::new("gaussian-bump", mass_sq, move |t, x| {
            1.0 + amplitude * (-(t * t) / (tau * tau)).exp() * (k * x).cos()
        })?
        .with_time_derivative(move |t, x| {
            amplitude * (-2.0 * t / (tau * tau)) * (-(t * t) / (tau * tau)).exp() * (k * x).cos()
        })
        .with_asymptotics(Asymptotics {
            out_profile: flat.clone(),
            in_profile: flat,
            decay_exponent: f64::INFINITY,
        }))
    }

    /// `h = h_out + A·(1 + t²)^{−δ/2}`.
    pub fn powerlaw_relax(h_out: f64, amplitude: f64, delta: f64, mass_sq: f64) -> Result<Self> {
        if !(h_out > 0.0) || !(h_out + amplitude.min(0.0) > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "powerlaw-relax needs h_out > 0 and h_out + A > 0 (h_out = {h_out}, A = {amplitude})"
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let asym = Self::constant(h_out, mass_sq)?;
        Ok(Self::new("powerlaw-relax", mass_sq, move |t, _| {
            h_out + amplitude * (1.0 + t * t).powf(-0.5 * delta)
        })?
        .with_time_derivative(move |t, _| {
            -amplitude * delta * t * (1.0 + t * t).powf(-0.5 * delta - 1.0)
        })
        .with_asymptotics(Asymptotics {
            out_profile: asym.clone(),
            in_profile: asym,
            decay_exponent: delta,
        }))
    }

    /// `h = exp(2κt)`, for which `∂_t log √h = κ` everywhere.
    pub fn exponential(kappa: f64, mass_sq: f64) -> Result<Self> {
        Ok(Self::new("exponential", mass_sq, move |t, _| (2.0 * kappa * t).exp())?
            .with_time_derivative(move |t, _| 2.0 * kappa * (2.0 * kappa * t).exp()))
    }

    /// Named preset as used in scenario configs.
    pub fn from_preset(name: &str, params: &BTreeMap<String, f64>, mass_sq: f64) -> Result<Self> {
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            params
                .get(key)
                .copied()
                .or(default)
                .ok_or_else(|| Error::Config(format!("profile '{name}' needs parameter '{key}'")))
        };
        let allowed: &[&str] = match name {
            "flat" => &[],
            "gaussian-bump" => &["A", "tau", "k"],
            "powerlaw-relax" => &["A", "delta", "h_out"],
            other => return Err(Error::Config(format!("unknown profile '{other}'"))),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str()) && k.as_str() != "lapse_amplitude") {
            return Err(Error::Config(format!("profile '{name}' has no parameter '{bad}'")));
        }
        let profile = match name {
            "flat" => Self::flat(mass_sq),
            "gaussian-bump" => Self::gaussian_bump(
                get("A", None)?,
                get("tau", Some(1.0))?,
                get("k", Some(1.0))?,
                mass_sq,
            ),
            _ => Self::powerlaw_relax(
                get("h_out", Some(1.0))?,
                get("A", None)?,
                get("delta", None)?,
                mass_sq,
            ),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        match params.get("lapse_amplitude") {
            Some(&amp) if amp != 0.0 => {
                if amp.abs() >= 1.0 {
                    return Err(Error::Config(format!("lapse_amplitude must satisfy |a| < 1, got {amp}")));
                }
                Ok(profile.with_lapse(move |x| 1.0 + amp * x.cos()))
            }
            _ => Ok(profile),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mass_sq(&self) -> f64 {
        self.mass_sq
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    pub fn has_unit_lapse(&self) -> bool {
        self.unit_lapse
    }

    pub fn asymptotics(&self) -> Option<&Asymptotics> {
        self.asymptotic.as_deref()
    }

    pub fn h(&self, t: f64, x: f64) -> f64 {
        (self.h)(t, x)
    }

    pub fn dh_dt(&self, t: f64, x: f64) -> Option<f64> {
        self.dh_dt.as_ref().map(|d| d(t, x))
    }

    pub fn lapse(&self, x: f64) -> f64 {
        (self.lapse)(x)
    }

    pub fn potential(&self, t: f64, x: f64) -> f64 {
        (self.potential)(t, x)
    }

    /// Checked sample of `h`.
    pub fn h_checked(&self, t: f64, x: f64) -> Result<f64> {
        let value = self.h(t, x);
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::MetricDegenerate { t, x, value });
        }
        Ok(value)
    }

    pub fn lapse_checked(&self, x: f64) -> Result<f64> {
        let value = self.lapse(x);
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::LapseNonPositive { x, value });
        }
        Ok(value)
    }

    pub fn potential_checked(&self, t: f64, x: f64) -> Result<f64> {
        let value = self.potential(t, x);
        if !(value >= self.mass_sq) || !value.is_finite() {
            return Err(Error::PotentialBelowFloor {
                t,
                x,
                value,
                floor: self.mass_sq,
            });
        }
        Ok(value)
    }
}

/// Per-node volume weights `√h(t, x_j)·Δx` at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    values: Vec<f64>,
    time: f64,
}

impl WeightVector {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self> {
        if let Some((j, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight entry {j} must be positive, got {v}"
            )));
        }
        Ok(Self { values, time })
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
            time: 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Square roots of the weights, the frame scaling `S` with `S² = W`.
    pub fn sqrt(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }

    /// Weights repeated for doubled data `(f₀, f₁)`.
    pub fn doubled(&self) -> Vec<f64> {
        let mut out = self.values.clone();
        out.extend_from_slice(&self.values);
        out
    }

    pub fn doubled_sqrt(&self) -> Vec<f64> {
        let s = self.sqrt();
        let mut out = s.clone();
        out.extend_from_slice(&s);
        out
    }

    /// Pointwise product, e.g. the density `N√h` of a lapse-rescaled frame.
    pub fn scaled(&self, factors: &[f64]) -> Self {
        Self {
            values: self.values.iter().zip(factors).map(|(w, f)| w * f).collect(),
            time: self.time,
        }
    }

    /// True when both vectors agree to relative `tol`.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()))
    }
}

pub fn weight_at(profile: &MetricProfile, grid: &Grid, t: f64) -> Result<WeightVector> {
    let values = grid
        .coordinates()
        .iter()
        .map(|&x| profile.h_checked(t, x).map(|h| h.sqrt() * grid.spacing()))
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightVector { values, time: t })
}

/// Analytic `∂_t` of the weights, `∂_t h / (2√h) · Δx`.
pub fn weight_rate_at(profile: &MetricProfile, grid: &Grid, t: f64) -> Result<Vec<f64>> {
    grid.coordinates()
        .iter()
        .map(|&x| {
            let h = profile.h_checked(t, x)?;
            let dh = profile.dh_dt(t, x).ok_or(Error::NotDifferentiable { t })?;
            Ok(0.5 * dh / h.sqrt() * grid.spacing())
        })
        .collect()
}

/// `(u|v)_w = Σ_j conj(u_j) v_j w_j`.
pub fn inner_product(u: &CVec, v: &CVec, w: &WeightVector) -> Result<C64> {
    if u.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: u.len(),
        });
    }
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: v.len(),
        });
    }
    Ok(u.iter()
        .zip(v.iter())
        .zip(w.values())
        .map(|((a, b), &wj)| a.conj() * b * wj)
        .sum())
}

/// Fourier mode `e^{ikx}` sampled on the grid.
pub fn fourier_mode(grid: &Grid, k: i64) -> CVec {
    let scale = 2.0 * PI / grid.circumference();
    CVec::from_iterator(
        grid.n_points(),
        grid.coordinates()
            .iter()
            .map(|&x| C64::from_polar(1.0, scale * k as f64 * x)),
    )
}
