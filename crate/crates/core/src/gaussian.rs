//! Gaussian states as mean vector plus covariance matrix.
//!
//! Conventions: quadratures `x = (a + a†)/√2`, `p = (a - a†)/(i√2)`, ordered
//! `(x₁, p₁, x₂, p₂, …)`; vacuum covariance `I/2`; entanglement in bits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::SQRT_2;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues};

pub const VACUUM_VARIANCE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Symplectic form `⊕ [[0, 1], [-1, 0]]` on `modes` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut om = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

fn symmetry_defect(cov: &DMatrix<f64>) -> f64 {
    (cov - cov.transpose()).amax()
}

impl CovarianceState {
    /// Validated constructor: symmetric covariance and the uncertainty
    /// relation `cov + (i/2)Ω ≥ 0`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::unchecked(mean, cov)?;
        let min = state.uncertainty_min_eig();
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("uncertainty relation violated (min eigenvalue {min:.3e})")));
        }
        Ok(state)
    }

    fn unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = cov.nrows();
        if n == 0 || !n.is_multiple_of(2) || cov.ncols() != n || mean.len() != n {
            return Err(Error::DimensionMismatch {
                expected: "2m quadratures with a 2m x 2m covariance".into(),
                found: format!("mean {} / cov {}x{}", mean.len(), cov.nrows(), cov.ncols()),
            });
        }
        let defect = symmetry_defect(&cov);
        if defect > 1e-12 {
            return invalid(format!("covariance not symmetric (defect {defect:.2e})"));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { mean: DVector::zeros(2 * modes), cov: DMatrix::identity(2 * modes, 2 * modes) * VACUUM_VARIANCE }
    }

    pub fn coherent(alpha: C64) -> Self {
        Self {
            mean: DVector::from_vec(vec![SQRT_2 * alpha.re, SQRT_2 * alpha.im]),
            cov: DMatrix::identity(2, 2) * VACUUM_VARIANCE,
        }
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return invalid(format!("mean photon number must be nonnegative, got {nbar}"));
        }
        Ok(Self { mean: DVector::zeros(2), cov: DMatrix::identity(2, 2) * (nbar + 0.5) })
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Direct sum: `self` occupies the leading modes.
    pub fn product(&self, other: &CovarianceState) -> CovarianceState {
        let (n, m) = (self.cov.nrows(), other.cov.nrows());
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov.view_mut((n, n), (m, m)).copy_from(&other.cov);
        let mean = DVector::from_iterator(n + m, self.mean.iter().chain(other.mean.iter()).copied());
        CovarianceState { mean, cov }
    }

    /// Mean and covariance of the linear combinations `L · r̂`.
    pub fn linear_marginal(&self, l: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        (l * &self.mean, l * &self.cov * l.transpose())
    }

    /// Applies `r̂ ↦ S r̂ + d`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> CovarianceState {
        CovarianceState { mean: s * &self.mean, cov: s * &self.cov * s.transpose() }
    }

    fn uncertainty_min_eig(&self) -> f64 {
        let om = symplectic_form(self.modes());
        let m =
            DMatrix::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| C64::new(self.cov[(i, j)], 0.5 * om[(i, j)]));
        hermitian_eigenvalues(&m).first().copied().unwrap_or(0.0)
    }

    pub fn is_physical(&self) -> bool {
        self.uncertainty_min_eig() >= -1e-10
    }

    /// Purity `1/√det(2·cov)`.
    pub fn purity(&self) -> f64 {
        1.0 / (&self.cov * 2.0).determinant().sqrt()
    }

    /// Symplectic eigenvalues in ascending order.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_spectrum(&self.cov)
    }

    /// Covariance with the momentum of the last mode negated.
    pub fn partial_transpose(&self) -> CovarianceState {
        let n = self.cov.nrows();
        let mut flip = DMatrix::identity(n, n);
        flip[(n - 1, n - 1)] = -1.0;
        self.transformed(&flip)
    }

    /// Single-mode marginal.
    pub fn marginal(&self, mode: usize) -> Result<CovarianceState> {
        if mode >= self.modes() {
            return invalid(format!("mode {mode} out of range"));
        }
        let i = 2 * mode;
        Ok(CovarianceState { mean: self.mean.rows(i, 2).into_owned(), cov: self.cov.view((i, i), (2, 2)).into_owned() })
    }
}

/// Eigenvalues of `|iΩσ|` for a positive definite `σ`, computed from the
/// Hermitian matrix `√σ (iΩ) √σ`, which is similar to `iΩσ`.
fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cov.nrows();
    if !n.is_multiple_of(2) || cov.ncols() != n {
        return invalid("covariance must be 2m x 2m");
    }
    let defect = symmetry_defect(cov);
    if defect > 1e-12 {
        return invalid(format!("covariance not symmetric (defect {defect:.2e})"));
    }
    let c = cov.map(|x| C64::new(x, 0.0));
    let (vals, vecs) = hermitian_eigen(&c);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidState("covariance is not positive definite".into()));
    }
    let mut root = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        root.column_mut(j).scale_mut(v.sqrt());
    }
    let root = &root * vecs.adjoint();
    let om = symplectic_form(n / 2).map(|x| C64::new(0.0, x));
    let h = &root * om * &root;
    let mut sym: Vec<f64> = hermitian_eigenvalues(&h).into_iter().filter(|v| *v > 0.0).collect();
    sym.sort_by(|a, b| a.total_cmp(b));
    if sym.len() != n / 2 {
        // degenerate numerical zero pairs; fall back to absolute values
        let mut all: Vec<f64> = hermitian_eigenvalues(&h).into_iter().map(f64::abs).collect();
        all.sort_by(|a, b| a.total_cmp(b));
        sym = all.into_iter().step_by(2).collect();
    }
    Ok(sym)
}

/// Two-mode squeezed vacuum with pump phase `phi`.
///
/// Diagonal blocks `cosh(2r)/2 · I`, off-diagonal block
/// `sinh(2r)/2 · R(φ) diag(1, -1) R(φ)ᵀ`; this matches the Fock-space
/// amplitudes `(e^{2iφ} tanh r)ⁿ / cosh r`.
pub fn tmss_cov(r: f64, phi: f64) -> Result<CovarianceState> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("squeeze parameter must be finite and nonnegative, got {r}"));
    }
    let ch = (2.0 * r).cosh() / 2.0;
    let sh = (2.0 * r).sinh() / 2.0;
    let (s2, c2) = (2.0 * phi).sin_cos();
    let c = [[sh * c2, sh * s2], [sh * s2, -sh * c2]];
    let mut cov = DMatrix::identity(4, 4) * ch;
    for i in 0..2 {
        for j in 0..2 {
            cov[(i, 2 + j)] = c[i][j];
            cov[(2 + j, i)] = c[i][j];
        }
    }
    Ok(CovarianceState { mean: DVector::zeros(4), cov })
}

/// Logarithmic negativity `max(0, -log₂(2ν̃₋))` of a two-mode state.
pub fn log_negativity(state: &CovarianceState) -> Result<f64> {
    if state.modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "two-mode state".into(),
            found: format!("{} modes", state.modes()),
        });
    }
    if !state.is_physical() {
        return Err(Error::InvalidState("covariance violates the uncertainty relation".into()));
    }
    let nu = state.partial_transpose().symplectic_eigenvalues()?;
    Ok((-(2.0 * nu[0]).log2()).max(0.0))
}

/// Fidelity between two single-mode Gaussian states, at least one of which
/// is pure: `exp(-½ dᵀ(V₁+V₂)⁻¹d) / √det(V₁+V₂)`.
pub fn pure_overlap_fidelity(pure: &CovarianceState, other: &CovarianceState) -> Result<f64> {
    if pure.modes() != 1 || other.modes() != 1 {
        return invalid("single-mode states required");
    }
    let sum = pure.cov() + other.cov();
    let d = pure.mean() - other.mean();
    let inv = sum.clone().try_inverse().ok_or_else(|| Error::InvalidState("singular covariance sum".into()))?;
    let q = (d.transpose() * inv * &d)[(0, 0)];
    Ok((-0.5 * q).exp() / sum.determinant().sqrt())
}

/// Analytic mean fidelity of unit-gain-style CV teleportation of the
/// coherent state `alpha` through `tmss_cov(r, 0)` with classical gain
/// `gain`.
///
/// Bob's output mode is `b + g(a_V - a_A†)`, so its covariance is
/// `g²/2 · I` plus the covariance of `(x_B - g x_A, p_B + g p_A)`.
pub fn bk_teleport_fidelity_for(r: f64, gain: f64, alpha: C64) -> Result<f64> {
    bk_teleport_fidelity_phased(r, gain, 0.0, alpha)
}

/// [`bk_teleport_fidelity_for`] when Bob's correction is rotated by `delta`
/// relative to the shared phase reference: `b + g e^{iδ}(a_V - a_A†)`.
pub fn bk_teleport_fidelity_phased(r: f64, gain: f64, delta: f64, alpha: C64) -> Result<f64> {
    let res = tmss_cov(r, 0.0)?;
    let (s, c) = delta.sin_cos();
    let (gc, gs) = (gain * c, gain * s);
    let l = DMatrix::from_row_slice(2, 4, &[-gc, -gs, 1.0, 0.0, -gs, gc, 0.0, 1.0]);
    let (_, noise) = res.linear_marginal(&l);
    let out_cov = DMatrix::identity(2, 2) * (gain * gain * VACUUM_VARIANCE) + noise;
    let shifted = alpha * C64::from_polar(gain, delta);
    let out = CovarianceState::new(CovarianceState::coherent(shifted).mean().clone(), out_cov)?;
    pure_overlap_fidelity(&CovarianceState::coherent(alpha), &out)
}

/// [`bk_teleport_fidelity_for`] at the origin of phase space. At unit gain
/// the result is `1/(1 + e^{-2r})` for every coherent input.
pub fn bk_teleport_fidelity(r: f64, gain: f64) -> Result<f64> {
    bk_teleport_fidelity_for(r, gain, C64::new(0.0, 0.0))
}
