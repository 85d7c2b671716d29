//! Thin helpers over `nalgebra` for small dense complex matrices.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn from_rows(rows: &[&[C64]]) -> CMat {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMat::from_fn(nrows, ncols, |i, j| rows[i][j])
}

pub fn pauli_x() -> CMat {
    from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}

pub fn pauli_y() -> CMat {
    from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> CMat {
    from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]])
}

/// Kronecker product; the left operand owns the most significant index block.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMat>) -> CMat {
    factors
        .into_iter()
        .fold(CMat::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Largest entry modulus.
pub fn max_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitary_defect(m: &CMat) -> f64 {
    max_abs_diff(&(m.adjoint() * m), &identity(m.nrows()))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Smallest singular value divided by the largest (0 for the zero matrix).
pub fn relative_sigma_min(m: &CMat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(m: &CMat) -> Result<CMat, f64> {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if min < -1e-12 * scale.max(1.0) {
        return Err(min);
    }
    let roots = eig.eigenvalues.map(|x| re(x.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    Ok(v * CMat::from_diagonal(&roots) * v.adjoint())
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}
