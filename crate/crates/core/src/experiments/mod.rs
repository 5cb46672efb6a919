//! Seeded Monte Carlo experiments on packetized laser beams.
//!
//! Every `run_*` function is a deterministic function of its parameters and
//! master seed. Trial `t` of stream `s` draws from a ChaCha8 generator seeded
//! with the master seed and positioned on stream `(s << 40) | t`, so trials
//! can execute in any order (or in parallel) without changing results.

mod entanglement;
mod identity;
mod molmer;
mod report;
pub mod stats;
mod teleport;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

pub use entanglement::{
    check_separability, run_distillation, DistillOutcome, DistillParams, SeparabilityOutcome, SweepPoint,
};
pub use identity::{cross_formalism, identity_check, CrossFormalismRow, IdentityOutcome, IdentityParams, IdentityRow};
pub use molmer::{
    run_molmer, run_molmer_with, run_phase_locking, Detection, LockModel, LockOutcome, LockParams, ModelRate,
    MolmerOutcome, MolmerParams,
};
pub use report::{Conventions, ExperimentReport, Status, Trace, Verdict, SCHEMA_VERSION};
pub use teleport::{run_teleportation, Reference, TeleportOutcome, TeleportParams};

/// How the global laser phase enters a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    /// The phase is drawn from the beam's phase mixture every trial.
    #[default]
    Mixture,
    /// The reference phase is pinned to zero (pure coherent states).
    Fixed,
}

/// Generator for one trial of one stream.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 40) | (trial & ((1 << 40) - 1)));
    rng
}

/// Maps `f` over trial indices, in parallel when the `parallel` feature is
/// on. Output order is the trial order either way.
pub(crate) fn map_trials<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Plus,
    Minus,
    PlusQuadrature,
    MinusQuadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Click(Detector),
    Quadrature { label: String, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub packet: usize,
    pub outcome: Outcome,
}

/// Ordered detection events of one trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeasurementRecord {
    events: Vec<Event>,
}

impl MeasurementRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, packet: usize, outcome: Outcome) -> Result<()> {
        if let Some(last) = self.events.last() {
            if packet < last.packet {
                return invalid(format!("packet index {packet} precedes {}", last.packet));
            }
        }
        if let Outcome::Quadrature { value, .. } = &outcome {
            if !value.is_finite() {
                return invalid("quadrature value must be finite");
            }
        }
        self.events.push(Event { packet, outcome });
        Ok(())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_trace(&self, name: &str) -> Trace {
        let rows = self.events.iter().map(|e| match &e.outcome {
            Outcome::Click(d) => vec![e.packet.to_string(), detector_name(*d).into(), String::new()],
            Outcome::Quadrature { label, value } => vec![e.packet.to_string(), label.clone(), value.to_string()],
        });
        Trace::from_rows(name, &["packet", "outcome", "value"], rows)
    }
}

fn detector_name(d: Detector) -> &'static str {
    match d {
        Detector::Plus => "plus",
        Detector::Minus => "minus",
        Detector::PlusQuadrature => "plus_quadrature",
        Detector::MinusQuadrature => "minus_quadrature",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trial_streams_are_distinct_and_repeatable() {
        let a: u64 = trial_rng(1, 0, 0).random();
        let b: u64 = trial_rng(1, 0, 1).random();
        let c: u64 = trial_rng(1, 1, 0).random();
        let d: u64 = trial_rng(2, 0, 0).random();
        assert_eq!(a, trial_rng(1, 0, 0).random::<u64>());
        assert!(a != b && a != c && a != d && b != c);
    }

    #[test]
    fn map_trials_keeps_order() {
        let v = map_trials(100, |t| t * 2);
        assert!(v.iter().enumerate().all(|(i, x)| *x == 2 * i));
    }

    #[test]
    fn record_rejects_out_of_order_and_nonfinite() {
        let mut r = MeasurementRecord::new();
        r.push(1, Outcome::Click(Detector::Plus)).unwrap();
        assert!(r.push(0, Outcome::Click(Detector::Minus)).is_err());
        assert!(r.push(2, Outcome::Quadrature { label: "x".into(), value: f64::NAN }).is_err());
        r.push(2, Outcome::Quadrature { label: "x".into(), value: 0.5 }).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.to_trace("rec").csv, "packet,outcome,value\n1,plus,\n2,x,0.5\n");
    }
}
