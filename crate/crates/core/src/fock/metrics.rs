use serde::Serialize;

use super::FockOperator;
use crate::error::Result;
use crate::linalg::{hermitian_eigenvalues, psd_sqrt};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateMetrics {
    pub trace_distance: f64,
    pub fidelity: f64,
}

/// Trace distance `½‖a - b‖₁` and Uhlmann fidelity `(Tr√(√a b √a))²`.
pub fn state_metrics(a: &FockOperator, b: &FockOperator) -> Result<StateMetrics> {
    a.same_shape(b)?;
    let diff = a.matrix() - b.matrix();
    let trace_distance = 0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>();

    // Tr√(√a b √a) is the trace norm of √a√b; singular values avoid taking
    // square roots of roundoff-level eigenvalues
    let prod = psd_sqrt(a.matrix()) * psd_sqrt(b.matrix());
    let root: f64 = prod.singular_values().iter().sum();

    Ok(StateMetrics { trace_distance: trace_distance.clamp(0.0, 1.0), fidelity: (root * root).clamp(0.0, 1.0) })
}
