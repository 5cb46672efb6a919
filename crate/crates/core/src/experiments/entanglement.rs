//! Phase-averaged squeezed light is separable; conditioning on a measured
//! local oscillator restores distillable entanglement.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::stats::{mean, std_err};
use super::{map_trials, trial_rng, ExperimentReport, Trace, Verdict};
use crate::beam::ExchangeableBeamState;
use crate::error::{invalid, Error, Result};
use crate::fock::{self, partial_transpose_min_eig, two_mode_squeezed, FockOperator, Modes};
use crate::gaussian::{self, tmss_cov};
use crate::inference::{PhasePosterior, DEFAULT_GRID, MIN_GRID};
use crate::linalg::max_abs_diff;

const STREAM_DISTILL: u64 = 3;

/// Largest truncation for which the conditional two-mode state is built
/// densely in distillation trials.
pub const MAX_DISTILL_DIM: usize = 24;

/// Weight of the first dropped Schmidt term, `tanh(r)^{2D}`, must stay below
/// this.
const SCHMIDT_TAIL: f64 = 1e-8;

fn check_tail(r: f64, dim: usize) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("squeeze parameter must be finite and nonnegative, got {r}"));
    }
    let tail = r.tanh().powi(2 * dim as i32);
    if tail >= SCHMIDT_TAIL {
        return Err(Error::Truncation {
            loss: tail,
            tolerance: SCHMIDT_TAIL,
            context: format!("two-mode squeezed state with r={r} at D={dim}"),
        });
    }
    Ok(())
}

/// `Σ_n tanh^{2n}r / cosh²r |n,n⟩⟨n,n|`.
fn schmidt_diagonal(r: f64, dim: usize) -> Result<FockOperator> {
    let mut mat = DMatrix::zeros(dim * dim, dim * dim);
    let (t, c) = (r.tanh(), r.cosh());
    for n in 0..dim {
        mat[(n * dim + n, n * dim + n)] = C64::new(t.powi(2 * n as i32) / (c * c), 0.0);
    }
    FockOperator::new(dim, Modes::Two, mat)
}

/// Conditional two-mode state `Σ_k w_k |TMSS(r, φ_k)⟩⟨TMSS(r, φ_k)|`.
///
/// Only `|n,n⟩` components are populated, with entries
/// `t_n t_m Σ_k w_k e^{2i(n-m)φ_k}`.
pub fn phase_mixed_tmss(r: f64, dim: usize, posterior: &PhasePosterior) -> Result<FockOperator> {
    let t: Vec<f64> = (0..dim).map(|n| r.tanh().powi(n as i32) / r.cosh()).collect();
    let moments: Vec<C64> =
        (0..dim).map(|j| posterior.iter().map(|(phi, w)| C64::from_polar(w, 2.0 * j as f64 * phi)).sum()).collect();
    let mut mat = DMatrix::zeros(dim * dim, dim * dim);
    for n in 0..dim {
        for m in 0..dim {
            let c = if n >= m { moments[n - m] } else { moments[m - n].conj() };
            mat[(n * dim + n, m * dim + m)] = c * (t[n] * t[m]);
        }
    }
    FockOperator::new(dim, Modes::Two, mat)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparabilityOutcome {
    pub r: f64,
    pub dim: usize,
    pub grid: usize,
    /// Largest entry-wise deviation from the closed-form diagonal mixture.
    pub diagonal_deviation: f64,
    pub mixture_pt_min_eig: f64,
    pub pure_pt_min_eig: f64,
    pub pure_log_negativity: f64,
    pub gaussian_log_negativity: f64,
}

/// Builds `∫dφ/2π TMSS(r,φ)` on a uniform `grid` (default `4D`) and tests it
/// for separability against the pure squeezed state.
pub fn check_separability(r: f64, dim: usize, grid: Option<usize>) -> Result<SeparabilityOutcome> {
    fock::check_dim(dim)?;
    check_tail(r, dim)?;
    let grid = grid.unwrap_or(4 * dim);
    if grid < 2 * dim - 1 {
        return invalid(format!("grid {grid} aliases the phase average; need at least {}", 2 * dim - 1));
    }
    let mut mix = FockOperator::zeros(dim, Modes::Two)?;
    for k in 0..grid {
        let phi = std::f64::consts::TAU * k as f64 / grid as f64;
        mix.add_outer_weighted(&two_mode_squeezed(r, phi, dim)?, 1.0 / grid as f64);
    }
    let diagonal_deviation = max_abs_diff(mix.matrix(), schmidt_diagonal(r, dim)?.matrix());
    let pure = two_mode_squeezed(r, 0.0, dim)?.to_operator();
    Ok(SeparabilityOutcome {
        r,
        dim,
        grid,
        diagonal_deviation,
        mixture_pt_min_eig: partial_transpose_min_eig(&mix)?,
        pure_pt_min_eig: partial_transpose_min_eig(&pure)?,
        pure_log_negativity: fock::log_negativity(&pure)?,
        gaussian_log_negativity: gaussian::log_negativity(&tmss_cov(r, 0.0)?)?,
    })
}

impl SeparabilityOutcome {
    pub fn report(&self) -> ExperimentReport {
        let mut rep = ExperimentReport::new("separability", None);
        rep.param("r", self.r).param("dim", self.dim).param("grid", self.grid);
        rep.stat("diagonal_deviation", self.diagonal_deviation)
            .stat("mixture_pt_min_eig", self.mixture_pt_min_eig)
            .stat("pure_pt_min_eig", self.pure_pt_min_eig)
            .stat("pure_log_negativity_fock", self.pure_log_negativity)
            .stat("pure_log_negativity_gaussian", self.gaussian_log_negativity);
        rep.verdict(Verdict::below("mixture_is_diagonal_schmidt_mixture", self.diagonal_deviation, 1e-10));
        rep.verdict(Verdict::at_least("mixture_is_ppt", self.mixture_pt_min_eig, -1e-10));
        if self.r == 0.0 {
            rep.verdict(Verdict::not_applicable("pure_state_is_npt", "r = 0 is the vacuum"));
        } else {
            rep.verdict(Verdict::below("pure_state_is_npt", self.pure_pt_min_eig, -0.01));
        }
        rep
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistillParams {
    pub r: f64,
    /// `|α'|` of each local-oscillator packet.
    pub lo_mag: f64,
    /// Packets Alice measures.
    pub n_lo: usize,
    pub dim: usize,
    pub trials: usize,
    pub grid: usize,
    /// Packet counts evaluated besides `n_lo`; 0 is always included.
    pub sweep: Vec<usize>,
    /// Required fraction of `2r/ln 2` at `n_lo`.
    pub fraction: f64,
}

impl Default for DistillParams {
    fn default() -> Self {
        Self {
            r: 0.3,
            lo_mag: 2.0,
            n_lo: 8,
            dim: 12,
            trials: 200,
            grid: DEFAULT_GRID,
            sweep: vec![0, 1, 2, 4, 8],
            fraction: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n_lo: usize,
    pub mean_log_negativity: f64,
    pub std_err: f64,
    pub mean_resultant_length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistillOutcome {
    pub params: DistillParams,
    pub seed: u64,
    pub sweep: Vec<SweepPoint>,
    /// Paired standard errors of consecutive sweep differences.
    pub step_std_err: Vec<f64>,
    /// Per-trial log-negativities, indexed like `sweep`.
    pub samples: Vec<Vec<f64>>,
    pub benchmark: f64,
}

struct DistillTrial {
    log_neg: Vec<f64>,
    resultant: Vec<f64>,
}

/// Alice heterodynes `N` packets of her local oscillator,
/// `z = α'e^{iφ} + ξ` with `E|ξ|² = 1`, and the squeezed pair is conditioned
/// on the resulting phase posterior.
///
/// The heterodyne likelihood on the grid is `exp(2α' Re(z̄ e^{iφ}))` up to a
/// φ-independent factor. All sweep points of a trial reuse one phase and
/// one noise sequence, so differences between sweep points are paired.
pub fn run_distillation(params: &DistillParams, seed: u64) -> Result<DistillOutcome> {
    let p = params;
    fock::check_dim(p.dim)?;
    if p.dim > MAX_DISTILL_DIM {
        return Err(Error::Capacity(format!(
            "dense conditional state needs D² = {} levels; at most D = {MAX_DISTILL_DIM} is supported",
            p.dim * p.dim
        )));
    }
    check_tail(p.r, p.dim)?;
    if !(p.lo_mag >= 0.0) || !p.lo_mag.is_finite() {
        return invalid(format!("local-oscillator magnitude must be finite and nonnegative, got {}", p.lo_mag));
    }
    if p.grid < MIN_GRID {
        return invalid(format!("phase grid must have at least {MIN_GRID} points"));
    }
    let mut sweep: Vec<usize> = p.sweep.iter().copied().chain([0, p.n_lo]).collect();
    sweep.sort_unstable();
    sweep.dedup();
    let n_max = *sweep.last().expect("nonempty");
    let m = p.grid;
    let beam = ExchangeableBeamState::new(p.lo_mag, n_max, PhasePosterior::uniform(m)?)?;
    let noise = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");

    let trials = map_trials(p.trials, |t| -> Result<DistillTrial> {
        let mut rng = trial_rng(seed, STREAM_DISTILL, t as u64);
        let phi = beam.sample_phase(&mut rng);
        let zs: Vec<C64> =
            (0..n_max).map(|_| beam.label(phi) + C64::new(noise.sample(&mut rng), noise.sample(&mut rng))).collect();
        let mut log_neg = Vec::with_capacity(sweep.len());
        let mut resultant = Vec::with_capacity(sweep.len());
        for &n in &sweep {
            let s: C64 = zs[..n].iter().sum();
            let ll: Vec<f64> = (0..m)
                .map(|k| 2.0 * p.lo_mag * (s.conj() * C64::from_polar(1.0, beam.posterior().angle(k))).re)
                .collect();
            let post = beam.posterior().bayes_update_log(&ll)?;
            resultant.push(post.circular_stats().resultant_length);
            log_neg.push(fock::log_negativity(&phase_mixed_tmss(p.r, p.dim, &post)?)?);
        }
        Ok(DistillTrial { log_neg, resultant })
    });
    let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;

    let samples: Vec<Vec<f64>> = (0..sweep.len()).map(|i| trials.iter().map(|t| t.log_neg[i]).collect()).collect();
    let points = sweep
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let rs: Vec<f64> = trials.iter().map(|t| t.resultant[i]).collect();
            SweepPoint {
                n_lo: n,
                mean_log_negativity: mean(&samples[i]),
                std_err: std_err(&samples[i]),
                mean_resultant_length: mean(&rs),
            }
        })
        .collect();
    let step_std_err = (1..sweep.len())
        .map(|i| {
            let d: Vec<f64> = samples[i].iter().zip(&samples[i - 1]).map(|(a, b)| a - b).collect();
            std_err(&d)
        })
        .collect();
    let benchmark = gaussian::log_negativity(&tmss_cov(p.r, 0.0)?)?;
    Ok(DistillOutcome { params: p.clone(), seed, sweep: points, step_std_err, samples, benchmark })
}

impl DistillOutcome {
    pub fn at(&self, n_lo: usize) -> Option<&SweepPoint> {
        self.sweep.iter().find(|s| s.n_lo == n_lo)
    }

    /// Largest drop between consecutive sweep points, in units of the paired
    /// standard error (negative when the curve only rises).
    pub fn worst_drop_sigma(&self) -> f64 {
        self.sweep
            .windows(2)
            .zip(&self.step_std_err)
            .map(|(w, se)| {
                let drop = w[0].mean_log_negativity - w[1].mean_log_negativity;
                if *se > 0.0 {
                    drop / se
                } else if drop > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn report(&self) -> ExperimentReport {
        let p = &self.params;
        let mut rep = ExperimentReport::new("distill", Some(self.seed));
        rep.param("r", p.r)
            .param("lo_mag", p.lo_mag)
            .param("n_lo", p.n_lo)
            .param("dim", p.dim)
            .param("trials", p.trials)
            .param("grid", p.grid)
            .param("sweep", &p.sweep)
            .param("fraction", p.fraction);
        rep.stat("sweep", &self.sweep)
            .stat("gaussian_benchmark_bits", self.benchmark)
            .stat("step_std_err", &self.step_std_err);
        let zero = self.at(0).map_or(f64::NAN, |s| s.mean_log_negativity);
        rep.verdict(Verdict::below("no_lo_no_entanglement", zero.abs(), 1e-9));
        let target = p.fraction * self.benchmark;
        match self.at(p.n_lo) {
            Some(s) if p.n_lo > 0 => {
                rep.verdict(Verdict::at_least("conditional_entanglement_restored", s.mean_log_negativity, target));
            }
            _ => {
                rep.verdict(Verdict::not_applicable("conditional_entanglement_restored", "n_lo = 0"));
            }
        }
        if self.sweep.len() < 2 {
            rep.verdict(Verdict::not_applicable("nondecreasing_in_n", "single sweep point"));
        } else {
            let worst = self.worst_drop_sigma();
            let mut v = Verdict::below("nondecreasing_in_n", worst, 3.0);
            v.detail = format!("largest drop {worst:.3} paired standard errors (limit 3)");
            rep.verdict(v);
        }
        rep.trace(Trace::from_rows(
            "sweep",
            &["n_lo", "mean_log_negativity", "std_err", "mean_resultant_length"],
            self.sweep.iter().map(|s| {
                vec![
                    s.n_lo.to_string(),
                    s.mean_log_negativity.to_string(),
                    s.std_err.to_string(),
                    s.mean_resultant_length.to_string(),
                ]
            }),
        ));
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn vacuum_is_separable() {
        let s = check_separability(0.0, 6, None).unwrap();
        assert!(s.diagonal_deviation < 1e-15);
        assert!(s.pure_pt_min_eig.abs() < 1e-15);
        let rep = s.report();
        assert!(rep.passed());
        assert_eq!(rep.find("pure_state_is_npt").unwrap().status, super::super::Status::NotApplicable);
    }

    #[test]
    fn separability_dichotomy() {
        let s = check_separability(0.4, 14, None).unwrap();
        assert!(s.diagonal_deviation < 1e-12, "{}", s.diagonal_deviation);
        assert!(s.mixture_pt_min_eig >= -1e-10);
        // pure TMSS: PT min eigenvalue -λ₀λ₁ = -tanh r / cosh² r
        let want = -(0.4f64.tanh()) / 0.4f64.cosh().powi(2);
        assert!((s.pure_pt_min_eig - want).abs() < 1e-10);
        assert!(s.report().passed());
    }

    #[test]
    fn truncation_precondition() {
        assert!(matches!(check_separability(1.5, 6, None), Err(Error::Truncation { .. })));
        assert!(check_separability(0.4, 6, Some(5)).is_err());
    }

    // trace norm of the partial transpose of the |n,n⟩-supported state:
    // Σ_{n,m} t_n t_m |c_{n-m}|, from the 1×1 and 2×2 block structure
    fn block_oracle(r: f64, dim: usize, post: &PhasePosterior) -> f64 {
        let t: Vec<f64> = (0..dim).map(|n| r.tanh().powi(n as i32) / r.cosh()).collect();
        let mut norm = 0.0;
        for n in 0..dim {
            for m in 0..dim {
                let j = n.abs_diff(m) as f64;
                let c: C64 = post.iter().map(|(phi, w)| C64::from_polar(w, 2.0 * j * phi)).sum();
                norm += t[n] * t[m] * c.norm();
            }
        }
        norm.log2().max(0.0)
    }

    #[test]
    fn conditional_state_negativity_matches_block_oracle() {
        let post = PhasePosterior::von_mises(64, 0.4, 5.0).unwrap();
        let rho = phase_mixed_tmss(0.3, 10, &post).unwrap();
        let dense = fock::log_negativity(&rho).unwrap();
        assert!((dense - block_oracle(0.3, 10, &post)).abs() < 1e-10);
        // a sharp posterior recovers the pure state: log₂(Σ_{n<D} t_n)², which
        // tends to 2r/ln2 as D grows
        let sharp = phase_mixed_tmss(0.3, 10, &PhasePosterior::delta(64, 3).unwrap()).unwrap();
        let sum: f64 = (0..10).map(|n| 0.3f64.tanh().powi(n) / 0.3f64.cosh()).sum();
        let got = fock::log_negativity(&sharp).unwrap();
        assert!((got - 2.0 * sum.log2()).abs() < 1e-10);
        assert!((got - 0.6 / LN_2).abs() < 1e-4);
        let flat = phase_mixed_tmss(0.3, 10, &PhasePosterior::uniform(64).unwrap()).unwrap();
        assert_eq!(fock::log_negativity(&flat).unwrap(), 0.0);
    }

    #[test]
    fn distillation_small_run() {
        let params = DistillParams { trials: 30, sweep: vec![0, 2], n_lo: 8, ..Default::default() };
        let out = run_distillation(&params, 4).unwrap();
        assert_eq!(out.sweep.iter().map(|s| s.n_lo).collect::<Vec<_>>(), vec![0, 2, 8]);
        assert_eq!(out.at(0).unwrap().mean_log_negativity, 0.0);
        assert!(out.at(8).unwrap().mean_log_negativity > 0.8 * 0.6 / LN_2);
        assert!(out.at(8).unwrap().mean_resultant_length > out.at(2).unwrap().mean_resultant_length);
        assert_eq!(out, run_distillation(&params, 4).unwrap());
    }

    #[test]
    fn distillation_capacity_and_truncation() {
        let big = DistillParams { dim: 40, ..Default::default() };
        assert!(matches!(run_distillation(&big, 1), Err(Error::Capacity(_))));
        let shallow = DistillParams { r: 2.0, dim: 6, ..Default::default() };
        assert!(matches!(run_distillation(&shallow, 1), Err(Error::Truncation { .. })));
    }
}
