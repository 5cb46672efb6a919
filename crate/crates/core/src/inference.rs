//! Bayesian inference over a circular phase on a uniform grid.
//!
//! A [`PhasePosterior`] holds normalized weights on `φ_k = 2πk/M`. Updates
//! multiply by a likelihood evaluated on the same grid and renormalize, so
//! multimodal early posteriors are represented exactly up to grid
//! resolution.

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::beam::ExchangeableBeamState;
use crate::error::{invalid, Error, Result};

pub const MIN_GRID: usize = 8;
pub const DEFAULT_GRID: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct PhasePosterior {
    weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircularStats {
    pub mean_direction: f64,
    pub resultant_length: f64,
    pub circular_std: f64,
}

fn check_grid(m: usize) -> Result<()> {
    if m < MIN_GRID {
        return invalid(format!("phase grid needs at least {MIN_GRID} points, got {m}"));
    }
    Ok(())
}

/// Grid angle `2πk/m`.
pub fn grid_angle(k: usize, m: usize) -> f64 {
    TAU * k as f64 / m as f64
}

/// Evaluates `f` on the `m`-point phase grid.
pub fn grid_likelihood(m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..m).map(|k| f(grid_angle(k, m))).collect()
}

impl PhasePosterior {
    pub fn uniform(m: usize) -> Result<Self> {
        check_grid(m)?;
        Ok(Self { weights: vec![1.0 / m as f64; m] })
    }

    /// All mass on grid point `k`.
    pub fn delta(m: usize, k: usize) -> Result<Self> {
        check_grid(m)?;
        if k >= m {
            return invalid(format!("grid index {k} out of range for {m} points"));
        }
        let mut weights = vec![0.0; m];
        weights[k] = 1.0;
        Ok(Self { weights })
    }

    /// All mass on the grid point nearest to `phi`.
    pub fn delta_at(m: usize, phi: f64) -> Result<Self> {
        check_grid(m)?;
        let k = (phi.rem_euclid(TAU) / TAU * m as f64).round() as usize % m;
        Self::delta(m, k)
    }

    /// Discretized von Mises density with location `mu` and concentration
    /// `kappa`.
    pub fn von_mises(m: usize, mu: f64, kappa: f64) -> Result<Self> {
        check_grid(m)?;
        if !(kappa >= 0.0) {
            return invalid("concentration must be nonnegative");
        }
        let log: Vec<f64> = grid_likelihood(m, |phi| kappa * (phi - mu).cos());
        Self::uniform(m)?.bayes_update_log(&log)
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_grid(weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return invalid("weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(Self { weights: weights.into_iter().map(|w| w / total).collect() })
    }

    pub fn grid_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn angle(&self, k: usize) -> f64 {
        grid_angle(k, self.grid_size())
    }

    /// `(φ_k, w_k)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let m = self.grid_size();
        self.weights.iter().enumerate().map(move |(k, &w)| (grid_angle(k, m), w))
    }

    /// Posterior ∝ prior × likelihood.
    pub fn bayes_update(&self, likelihood: &[f64]) -> Result<Self> {
        if likelihood.len() != self.grid_size() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} likelihood values", self.grid_size()),
                found: likelihood.len().to_string(),
            });
        }
        if likelihood.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return invalid("likelihood values must be finite and nonnegative");
        }
        let raw: Vec<f64> = self.weights.iter().zip(likelihood).map(|(w, l)| w * l).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ImpossibleEvidence);
        }
        Ok(Self { weights: raw.into_iter().map(|w| w / total).collect() })
    }

    /// Update from log-likelihood values; shifts by the maximum on the
    /// current support before exponentiating.
    pub fn bayes_update_log(&self, log_likelihood: &[f64]) -> Result<Self> {
        if log_likelihood.len() != self.grid_size() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} likelihood values", self.grid_size()),
                found: log_likelihood.len().to_string(),
            });
        }
        let top = self
            .weights
            .iter()
            .zip(log_likelihood)
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, l)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::ImpossibleEvidence);
        }
        let lik: Vec<f64> = log_likelihood.iter().map(|l| (l - top).exp()).collect();
        self.bayes_update(&lik)
    }

    /// Grid angle with the largest weight (lowest index on ties).
    pub fn mode(&self) -> f64 {
        let mut best = 0;
        for (k, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = k;
            }
        }
        self.angle(best)
    }

    /// Expectation of `f(φ)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(phi, w)| w * f(phi)).sum()
    }

    /// Cyclic shift by `steps` grid points (rotation by `2π·steps/M`).
    pub fn rotated(&self, steps: usize) -> Self {
        let m = self.grid_size();
        let mut weights = vec![0.0; m];
        for (k, w) in self.weights.iter().enumerate() {
            weights[(k + steps) % m] = *w;
        }
        Self { weights }
    }

    pub fn circular_stats(&self) -> CircularStats {
        let z: C64 = self.iter().map(|(phi, w)| C64::from_polar(w, phi)).sum();
        let r = z.norm().min(1.0);
        // exact cancellation leaves roundoff-sized residues with arbitrary angle
        let r = if r < 1e-14 { 0.0 } else { r };
        CircularStats {
            mean_direction: if r == 0.0 { 0.0 } else { z.arg().rem_euclid(TAU) },
            resultant_length: r,
            circular_std: (-2.0 * r.ln()).sqrt(),
        }
    }
}

/// Replaces the beam's phase posterior by its Bayes update and removes the
/// `measured` packets that produced the evidence.
pub fn condition_beam(
    beam: &ExchangeableBeamState,
    likelihood: &[f64],
    measured: usize,
) -> Result<ExchangeableBeamState> {
    if measured > beam.n_packets() {
        return invalid(format!("cannot measure {measured} of {} packets", beam.n_packets()));
    }
    let posterior = beam.posterior().bayes_update(likelihood)?;
    Ok(beam.with_posterior(posterior, beam.n_packets() - measured))
}

/// [`condition_beam`] with log-likelihood input.
pub fn condition_beam_log(
    beam: &ExchangeableBeamState,
    log_likelihood: &[f64],
    measured: usize,
) -> Result<ExchangeableBeamState> {
    if measured > beam.n_packets() {
        return invalid(format!("cannot measure {measured} of {} packets", beam.n_packets()));
    }
    let posterior = beam.posterior().bayes_update_log(log_likelihood)?;
    Ok(beam.with_posterior(posterior, beam.n_packets() - measured))
}

/// Writes a posterior trace in wide form: a `step` column followed by one
/// column per grid angle (header is the angle in radians).
pub fn write_posterior_trace<W: Write>(mut out: W, trace: &[PhasePosterior]) -> io::Result<()> {
    let Some(first) = trace.first() else {
        return writeln!(out, "step");
    };
    let m = first.grid_size();
    write!(out, "step")?;
    for k in 0..m {
        write!(out, ",{:.6}", grid_angle(k, m))?;
    }
    writeln!(out)?;
    for (step, post) in trace.iter().enumerate() {
        write!(out, "{step}")?;
        for w in post.weights() {
            write!(out, ",{w}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
