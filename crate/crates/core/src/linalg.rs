//! Dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Full eigendecomposition `m = V diag(λ) V†`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues below `1e-14` of the largest are roundoff and are clipped to
/// zero; taking their square root would inflate them to `~1e-7`.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let floor = 1e-14 * top.max(f64::MIN_POSITIVE);
    let mut left = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = if v > floor { v.sqrt() } else { 0.0 };
        left.column_mut(j).scale_mut(s);
    }
    &left * vecs.adjoint()
}

/// Largest entry-wise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}
