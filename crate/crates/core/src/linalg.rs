//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    CMat::zeros(n, m)
}

pub fn diag_real(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| c(v))))
}

/// `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn block2(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(cc);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

/// Block `(i, j)` of size `n` from a matrix partitioned into `n`-blocks.
pub fn block(m: &CMat, i: usize, j: usize, n: usize) -> CMat {
    m.view((i * n, j * n), (n, n)).into_owned()
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let z = CMat::zeros(n, n);
    block2(a, &z, &z, b)
}

/// The block swap `[[0, 1], [1, 0]]` on `C^n ⊕ C^n`.
pub fn swap_blocks(n: usize) -> CMat {
    let id = identity(n);
    let z = CMat::zeros(n, n);
    block2(&z, &id, &id, &z)
}

/// Spectral (largest singular value) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match to_faer(m).singular_values() {
        Ok(s) => s.into_iter().fold(0.0, f64::max),
        Err(_) => f64::NAN,
    }
}

/// Spectral norm of a Hermitian matrix via its eigenvalues.
pub fn hermitian_norm(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = to_faer(&hermitian_part(m));
    match h.self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(vals) => vals,
        Err(_) => vec![f64::NAN; m.nrows()],
    }
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Hermitian eigendecomposition with ascending eigenvalues and unit
/// eigenvectors whose first non-negligible component is real positive.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let h = to_faer(&hermitian_part(m));
    let Ok(eig) = h.self_adjoint_eigen(faer::Side::Lower) else {
        return (vec![f64::NAN; n], CMat::from_element(n, n, C64::new(f64::NAN, 0.0)));
    };
    let (s, u) = (eig.S(), eig.U());
    let mut vecs = CMat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for col in 0..n {
        vals.push(s[col].re);
        let mut v = CVec::from_fn(n, |i, _| u[(i, col)]);
        let norm = v.norm();
        if norm > 0.0 {
            v /= c(norm);
        }
        let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
            let phase = pivot.conj() / pivot.norm();
            v *= phase;
        }
        vecs.set_column(col, &v);
    }
    (vals, vecs)
}

pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let lu = m.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular(what.to_string()));
    }
    Ok(inv)
}

/// Left-multiply by `diag(d)`.
pub fn scale_rows(m: &CMat, d: &[f64]) -> CMat {
    let mut out = m.clone();
    for (i, &s) in d.iter().enumerate() {
        out.row_mut(i).scale_mut(s);
    }
    out
}

/// Right-multiply by `diag(d)`.
pub fn scale_cols(m: &CMat, d: &[f64]) -> CMat {
    let mut out = m.clone();
    for (j, &s) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

/// Similarity `diag(s) m diag(s)^{-1}`.
pub fn similarity(m: &CMat, s: &[f64]) -> CMat {
    let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    scale_cols(&scale_rows(m, s), &inv)
}

/// Unitary discrete Fourier matrix, rows indexed by wavenumber
/// `0, 1, …, n/2, −(n/2 − 1), …, −1` in FFT order.
pub fn dft_matrix(n: usize) -> CMat {
    let norm = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |k, j| {
        let phase = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
        C64::from_polar(norm, phase)
    })
}

/// Signed wavenumber of FFT-ordered index `k`.
pub fn signed_wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Exponent `p` of a fit `y ≈ C·x^p` in log-log space.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}
