//! Truncated Fock-space linear algebra for one or two bosonic modes.
//!
//! Every mode is truncated to the number states `|0⟩ … |D-1⟩`. Two-mode
//! objects use the row-major ordering `|n⟩⊗|m⟩ ↦ n·D + m`, with mode 0 the
//! left factor. States carry their own truncation-loss figure (`1 - ‖ψ‖²`
//! for vectors, `1 - Tr ρ` for operators) so callers can check that `D` was
//! large enough instead of discovering it from a wrong answer.

mod metrics;
mod ops;
mod states;

pub use metrics::{state_metrics, StateMetrics};
pub use ops::{
    beamsplitter_amplitudes, beamsplitter_apply, displacement_apply, log_negativity, partial_trace, partial_transpose,
    partial_transpose_min_eig, BeamSplitter, Displacer, FockState,
};
pub use states::{
    coherent_fits, coherent_state, number_state, phase_average, poisson_number_mixture, thermal_state,
    two_mode_squeezed, vacuum,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, trace, CMatrix, CVector};

/// Default tolerance on truncation loss before a state is considered
/// under-resolved.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

/// Smallest admissible truncation dimension.
pub const MIN_DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modes {
    One,
    Two,
}

impl Modes {
    pub fn count(self) -> u32 {
        match self {
            Modes::One => 1,
            Modes::Two => 2,
        }
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM {
        return Err(Error::InvalidDimension { dim, min: MIN_DIM });
    }
    Ok(())
}

/// Pure state on a truncated one- or two-mode Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    dim: usize,
    modes: Modes,
    amps: CVector,
}

impl FockVector {
    pub fn new(dim: usize, modes: Modes, amps: CVector) -> Result<Self> {
        check_dim(dim)?;
        let expected = dim.pow(modes.count());
        if amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected} amplitudes"),
                found: format!("{}", amps.len()),
            });
        }
        Ok(Self { dim, modes, amps })
    }

    pub fn from_vec(dim: usize, modes: Modes, amps: Vec<C64>) -> Result<Self> {
        Self::new(dim, modes, DVector::from_vec(amps))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps[n]
    }

    /// Amplitude of `|n⟩⊗|m⟩`; only meaningful for two-mode states.
    pub fn amplitude2(&self, n: usize, m: usize) -> C64 {
        self.amps[n * self.dim + m]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn truncation_loss(&self) -> f64 {
        1.0 - self.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let n = self.amps.norm();
        Self { amps: self.amps.unscale(n), ..self.clone() }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn overlap_sqr(&self, other: &FockVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Mean photon number of a single-mode state, or of mode `0` for a
    /// two-mode state.
    pub fn mean_photons(&self) -> f64 {
        match self.modes {
            Modes::One => self.amps.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum(),
            Modes::Two => self.to_operator().reduced(0).map(|r| r.mean_photons()).unwrap_or(0.0),
        }
    }

    pub fn to_operator(&self) -> FockOperator {
        FockOperator { dim: self.dim, modes: self.modes, mat: &self.amps * self.amps.adjoint() }
    }

    /// Tensor product of two single-mode states.
    pub fn tensor(&self, other: &FockVector) -> Result<FockVector> {
        if self.modes != Modes::One || other.modes != Modes::One || self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: "two single-mode states of equal dimension".into(),
                found: format!("{:?}/{} and {:?}/{}", self.modes, self.dim, other.modes, other.dim),
            });
        }
        let d = self.dim;
        let amps = DVector::from_fn(d * d, |i, _| self.amps[i / d] * other.amps[i % d]);
        Ok(FockVector { dim: d, modes: Modes::Two, amps })
    }
}

/// Operator (density matrix or unitary) on a truncated one- or two-mode
/// Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: usize,
    modes: Modes,
    mat: CMatrix,
}

impl FockOperator {
    pub fn new(dim: usize, modes: Modes, mat: CMatrix) -> Result<Self> {
        check_dim(dim)?;
        let expected = dim.pow(modes.count());
        if mat.nrows() != expected || mat.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected}x{expected}"),
                found: format!("{}x{}", mat.nrows(), mat.ncols()),
            });
        }
        Ok(Self { dim, modes, mat })
    }

    pub fn zeros(dim: usize, modes: Modes) -> Result<Self> {
        check_dim(dim)?;
        let n = dim.pow(modes.count());
        Ok(Self { dim, modes, mat: DMatrix::zeros(n, n) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> Modes {
        self.modes
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn truncation_loss(&self) -> f64 {
        1.0 - self.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.mat)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// Checks the density-operator invariants: Hermitian within `1e-12`,
    /// trace within `tol` of one, and no eigenvalue below `-1e-10`.
    pub fn validate_density(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.2e})")));
        }
        let loss = self.truncation_loss();
        if loss.abs() > tol {
            return Err(Error::Truncation { loss, tolerance: tol, context: "density operator trace".into() });
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn mean_photons(&self) -> f64 {
        match self.modes {
            Modes::One => (0..self.dim).map(|n| n as f64 * self.mat[(n, n)].re).sum(),
            Modes::Two => self.reduced(0).map(|r| r.mean_photons()).unwrap_or(0.0),
        }
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &FockVector) -> C64 {
        psi.amps.dotc(&(&self.mat * &psi.amps))
    }

    pub fn tensor(&self, other: &FockOperator) -> Result<FockOperator> {
        if self.modes != Modes::One || other.modes != Modes::One || self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: "two single-mode operators of equal dimension".into(),
                found: format!("{:?}/{} and {:?}/{}", self.modes, self.dim, other.modes, other.dim),
            });
        }
        Ok(FockOperator { dim: self.dim, modes: Modes::Two, mat: self.mat.kronecker(&other.mat) })
    }

    pub fn scaled(&self, s: f64) -> FockOperator {
        FockOperator { mat: self.mat.scale(s), ..self.clone() }
    }

    pub fn add(&self, other: &FockOperator) -> Result<FockOperator> {
        self.same_shape(other)?;
        Ok(FockOperator { mat: &self.mat + &other.mat, ..self.clone() })
    }

    pub(crate) fn add_outer_weighted(&mut self, psi: &FockVector, w: f64) {
        self.mat.gerc(C64::new(w, 0.0), &psi.amps, &psi.amps, C64::new(1.0, 0.0));
    }

    pub(crate) fn same_shape(&self, other: &FockOperator) -> Result<()> {
        if self.dim != other.dim || self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?} modes, dim {}", self.modes, self.dim),
                found: format!("{:?} modes, dim {}", other.modes, other.dim),
            });
        }
        Ok(())
    }

    /// Single-mode marginal keeping `keep` (0 or 1).
    pub fn reduced(&self, keep: usize) -> Result<FockOperator> {
        partial_trace(self, keep)
    }
}
