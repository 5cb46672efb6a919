//! A CW laser beam as an exchangeable sequence of packet modes.
//!
//! Each packet of duration `T` carries the coherent amplitude
//! `α₀ = √(κT)·α·e^{iφ}`, and every packet shares the same unknown phase, so
//! the `N`-packet state is `∫dφ P(φ) (|α₀e^{iφ}⟩⟨α₀e^{iφ}|)^{⊗N}`. The
//! representation stores only `(|α₀|, N, P)`; since nothing is stored per
//! packet, all packets are interchangeable. Dense operators are built only
//! for one or two packets.
//!
//! A pulsed laser with an independent phase per pulse would instead be
//! `(ρ_{|α₀|})^{⊗N}`; the experiments use that as their control model.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::fock::{coherent_state, FockOperator, Modes};
use crate::inference::{PhasePosterior, DEFAULT_GRID};

/// Largest number of packets materialized as a dense operator.
pub const MAX_DENSE_PACKETS: usize = 2;

/// Cavity parameters a beam was derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub kappa_t: f64,
    pub cavity_alpha: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeableBeamState {
    mag: f64,
    n_packets: usize,
    posterior: PhasePosterior,
    provenance: Option<Provenance>,
}

/// One draw from the phase mixture: the shared phase and the resulting
/// per-packet coherent labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub phi: f64,
    pub labels: Vec<C64>,
}

/// `√(κT)·α·e^{iφ}`: the coherent amplitude of each output packet for a
/// cavity field `α`.
pub fn packet_amplitude(kappa_t: f64, alpha: C64, phi: f64) -> Result<C64> {
    if !(kappa_t > 0.0) || !kappa_t.is_finite() {
        return invalid(format!("κT must be positive, got {kappa_t}"));
    }
    Ok(kappa_t.sqrt() * alpha * C64::from_polar(1.0, phi))
}

/// Beam with a uniform phase prior on the default grid.
pub fn make_beam(mag: f64, n_packets: usize) -> Result<ExchangeableBeamState> {
    ExchangeableBeamState::new(mag, n_packets, PhasePosterior::uniform(DEFAULT_GRID)?)
}

impl ExchangeableBeamState {
    pub fn new(mag: f64, n_packets: usize, posterior: PhasePosterior) -> Result<Self> {
        if !(mag >= 0.0) || !mag.is_finite() {
            return invalid(format!("packet magnitude must be finite and nonnegative, got {mag}"));
        }
        Ok(Self { mag, n_packets, posterior, provenance: None })
    }

    /// Beam leaving a cavity with field amplitude `alpha` and `κT`.
    pub fn from_cavity(kappa_t: f64, alpha: C64, n_packets: usize) -> Result<Self> {
        let a0 = packet_amplitude(kappa_t, alpha, 0.0)?;
        let mut beam = make_beam(a0.norm(), n_packets)?;
        beam.provenance = Some(Provenance { kappa_t, cavity_alpha: alpha });
        Ok(beam)
    }

    pub fn mag(&self) -> f64 {
        self.mag
    }

    pub fn n_packets(&self) -> usize {
        self.n_packets
    }

    pub fn posterior(&self) -> &PhasePosterior {
        &self.posterior
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub(crate) fn with_posterior(&self, posterior: PhasePosterior, n_packets: usize) -> Self {
        Self { posterior, n_packets, ..self.clone() }
    }

    /// Packet label for a given global phase.
    pub fn label(&self, phi: f64) -> C64 {
        C64::from_polar(self.mag, phi)
    }

    /// Joint state of `k` packets, `Σ_j w_j (|α₀e^{iφ_j}⟩⟨·|)^{⊗k}`.
    pub fn reduced_state(&self, k: usize, dim: usize) -> Result<FockOperator> {
        if k == 0 || k > self.n_packets {
            return invalid(format!("cannot reduce to {k} of {} packets", self.n_packets));
        }
        if k > MAX_DENSE_PACKETS {
            return Err(Error::Capacity(format!(
                "{k}-packet dense state has dimension {dim}^{k}; at most {MAX_DENSE_PACKETS} packets are materialized"
            )));
        }
        let modes = if k == 1 { Modes::One } else { Modes::Two };
        let mut acc = FockOperator::zeros(dim, modes)?;
        for (phi, w) in self.posterior.iter() {
            if w == 0.0 {
                continue;
            }
            let psi = coherent_state(self.label(phi), dim)?;
            let psi = if k == 1 { psi } else { psi.tensor(&psi)? };
            acc.add_outer_weighted(&psi, w);
        }
        Ok(acc)
    }

    /// Draws the shared phase from the posterior. Deterministic in `seed`.
    pub fn sample_realization(&self, seed: u64) -> Realization {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let phi = self.sample_phase(rng);
        Realization { phi, labels: vec![self.label(phi); self.n_packets] }
    }

    pub fn sample_phase<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let w = self.posterior.weights();
        for (k, p) in w.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.posterior.angle(k);
            }
        }
        // u landed in the roundoff gap above the cumulative sum
        let last = w.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        self.posterior.angle(last)
    }
}
