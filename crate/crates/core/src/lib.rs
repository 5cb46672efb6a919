//! Numerical laboratory for the quantum state of a propagating CW laser beam.
//!
//! The beam is a sequence of equal-duration packet modes sharing one unknown
//! global phase: `∫dφ/2π (|α₀e^{iφ}⟩⟨α₀e^{iφ}|)^{⊗N}`. The crate provides
//! truncated Fock-space and covariance-matrix machinery, Bayesian phase
//! inference on a circular grid, and seeded experiment harnesses built on
//! them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gaussian;
pub mod inference;
pub mod linalg;

pub use error::{Error, Result};
