//! Verification suite: the phase-averaged coherent state is the Poisson
//! number mixture, packets of one beam are correlated, and the Fock and
//! covariance pictures agree on squeezed-state entanglement.

use serde::Serialize;

use super::{ExperimentReport, Trace, Verdict};
use crate::beam::make_beam;
use crate::error::{invalid, Result};
use crate::fock::{self, phase_average, poisson_number_mixture, state_metrics, two_mode_squeezed};
use crate::gaussian::{self, tmss_cov};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityParams {
    /// Coherent magnitudes `|α|` to check.
    pub mags: Vec<f64>,
    /// Truncation; `None` picks `⌈|α|² + 6|α| + 10⌉` per magnitude.
    pub dim: Option<usize>,
    /// Phase grid size; `None` picks `2D`.
    pub grid: Option<usize>,
    pub tolerance: f64,
    pub beam_mag: f64,
    pub beam_dim: usize,
    pub correlation_threshold: f64,
    pub cross_r: Vec<f64>,
    pub cross_dim: usize,
    pub cross_tolerance: f64,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self {
            mags: vec![0.5, 1.0, 2.0],
            dim: None,
            grid: None,
            tolerance: 1e-10,
            beam_mag: 1.0,
            beam_dim: 16,
            correlation_threshold: 0.1,
            cross_r: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            cross_dim: 16,
            cross_tolerance: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub mag: f64,
    pub dim: usize,
    pub grid: usize,
    pub trace_distance: f64,
    pub fidelity: f64,
    pub truncation_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossFormalismRow {
    pub r: f64,
    pub fock: f64,
    pub gaussian: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityOutcome {
    pub params: IdentityParams,
    pub rows: Vec<IdentityRow>,
    /// `(|α|, M, trace distance)` over `M = 1..=2D`.
    pub aliasing: Vec<(f64, usize, f64)>,
    /// Trace distance between the two-packet state and the product of its
    /// one-packet marginals.
    pub packet_correlation: f64,
    pub cross: Vec<CrossFormalismRow>,
}

pub fn default_dim(mag: f64) -> usize {
    (mag * mag + 6.0 * mag + 10.0).ceil() as usize
}

/// Fock-route (dense partial transpose) and covariance-route log-negativity
/// of the two-mode squeezed vacuum.
pub fn cross_formalism(rs: &[f64], dim: usize) -> Result<Vec<CrossFormalismRow>> {
    rs.iter()
        .map(|&r| {
            let f = fock::log_negativity(&two_mode_squeezed(r, 0.0, dim)?.to_operator())?;
            let g = gaussian::log_negativity(&tmss_cov(r, 0.0)?)?;
            Ok(CrossFormalismRow { r, fock: f, gaussian: g })
        })
        .collect()
}

pub fn identity_check(params: &IdentityParams) -> Result<IdentityOutcome> {
    if params.mags.is_empty() {
        return invalid("no magnitudes to check");
    }
    let mut rows = Vec::new();
    let mut aliasing = Vec::new();
    for &mag in &params.mags {
        let dim = params.dim.unwrap_or_else(|| default_dim(mag));
        let grid = params.grid.unwrap_or(2 * dim);
        let poi = poisson_number_mixture(mag, dim)?;
        let avg = phase_average(mag, dim, grid)?;
        let m = state_metrics(&avg, &poi)?;
        rows.push(IdentityRow {
            mag,
            dim,
            grid,
            trace_distance: m.trace_distance,
            fidelity: m.fidelity,
            truncation_loss: poi.truncation_loss(),
        });
        for g in 1..=2 * dim {
            let d = state_metrics(&phase_average(mag, dim, g)?, &poi)?.trace_distance;
            aliasing.push((mag, g, d));
        }
    }

    let beam = make_beam(params.beam_mag, 2)?;
    let joint = beam.reduced_state(2, params.beam_dim)?;
    let one = beam.reduced_state(1, params.beam_dim)?;
    let packet_correlation = state_metrics(&joint, &one.tensor(&one)?)?.trace_distance;

    let cross = cross_formalism(&params.cross_r, params.cross_dim)?;
    Ok(IdentityOutcome { params: params.clone(), rows, aliasing, packet_correlation, cross })
}

impl IdentityOutcome {
    pub fn max_trace_distance(&self) -> f64 {
        self.rows.iter().map(|r| r.trace_distance).fold(0.0, f64::max)
    }

    pub fn max_cross_gap(&self) -> f64 {
        self.cross.iter().map(|c| (c.fock - c.gaussian).abs()).fold(0.0, f64::max)
    }

    pub fn report(&self) -> ExperimentReport {
        let p = &self.params;
        let mut rep = ExperimentReport::new("identity-check", None);
        rep.param("mags", &p.mags)
            .param("dim", p.dim)
            .param("grid", p.grid)
            .param("tolerance", p.tolerance)
            .param("beam_mag", p.beam_mag)
            .param("beam_dim", p.beam_dim)
            .param("correlation_threshold", p.correlation_threshold)
            .param("cross_r", &p.cross_r)
            .param("cross_dim", p.cross_dim)
            .param("cross_tolerance", p.cross_tolerance);
        rep.stat("identity", &self.rows)
            .stat("max_trace_distance", self.max_trace_distance())
            .stat("packet_correlation_trace_distance", self.packet_correlation)
            .stat("cross_formalism", &self.cross)
            .stat("max_cross_formalism_gap_bits", self.max_cross_gap());
        for r in &self.rows {
            if r.truncation_loss > fock::TRUNCATION_TOLERANCE {
                rep.warn(format!("|alpha|={} at D={} loses {:.3e} of its norm", r.mag, r.dim, r.truncation_loss));
            }
        }
        rep.verdict(Verdict::below("phase_average_equals_poisson", self.max_trace_distance(), p.tolerance));
        rep.verdict(Verdict::above("packets_correlated", self.packet_correlation, p.correlation_threshold));
        rep.verdict(Verdict::below("fock_matches_gaussian_log_negativity", self.max_cross_gap(), p.cross_tolerance));
        rep.trace(Trace::from_rows(
            "identity",
            &["mag", "dim", "grid", "trace_distance", "fidelity", "truncation_loss"],
            self.rows.iter().map(|r| {
                vec![
                    r.mag.to_string(),
                    r.dim.to_string(),
                    r.grid.to_string(),
                    r.trace_distance.to_string(),
                    r.fidelity.to_string(),
                    r.truncation_loss.to_string(),
                ]
            }),
        ));
        rep.trace(Trace::from_rows(
            "aliasing",
            &["mag", "grid", "trace_distance"],
            self.aliasing.iter().map(|(m, g, d)| vec![m.to_string(), g.to_string(), d.to_string()]),
        ));
        rep.trace(Trace::from_rows(
            "cross_formalism",
            &["r", "fock_log_negativity", "gaussian_log_negativity"],
            self.cross.iter().map(|c| vec![c.r.to_string(), c.fock.to_string(), c.gaussian.to_string()]),
        ));
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn default_dims() {
        assert_eq!(default_dim(0.5), 14);
        assert_eq!(default_dim(1.0), 17);
        assert_eq!(default_dim(2.0), 26);
    }

    #[test]
    fn cross_formalism_pure_tmss() {
        // both routes against 2r/ln2
        for row in cross_formalism(&[0.2, 0.6], 20).unwrap() {
            let want = 2.0 * row.r / LN_2;
            assert!((row.gaussian - want).abs() < 1e-10);
            assert!((row.fock - want).abs() < 0.02);
        }
    }

    #[test]
    fn single_magnitude_suite() {
        let params = IdentityParams { mags: vec![1.0], dim: Some(20), beam_dim: 8, ..Default::default() };
        let out = identity_check(&params).unwrap();
        assert_eq!(out.rows[0].grid, 40);
        assert!(out.rows[0].trace_distance < 1e-10);
        // a single grid point leaves a pure coherent state
        let (_, g, d) = out.aliasing[0];
        assert_eq!(g, 1);
        assert!(d > 0.5);
        assert!(out.report().passed());
    }
}
