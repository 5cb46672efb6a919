//! Interference of two independent beams: relative-phase collapse under
//! photon counting, and phase locking across the packets of a beam.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::stats::{binomial_sigma, chi2_critical, median};
use super::{
    map_trials, trial_rng, Detector, ExperimentReport, MeasurementRecord, Outcome, PhaseModel, Trace, Verdict,
};
use crate::beam::ExchangeableBeamState;
use crate::error::{invalid, Result};
use crate::inference::{grid_angle, write_posterior_trace, PhasePosterior, DEFAULT_GRID, MIN_GRID};

const STREAM_MOLMER: u64 = 1;
const STREAM_LOCK: u64 = 2;

/// Detection layout behind the 50-50 mixing of the two packets.
///
/// `TwoPort` counts both outputs of one beamsplitter (offsets 0 and π).
/// `FourPort` splits each packet in half and adds a second interferometer
/// shifted by π/2, so that clicks distinguish `Δ` from `-Δ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    TwoPort,
    #[default]
    FourPort,
}

impl Detection {
    pub fn offsets(self) -> &'static [f64] {
        match self {
            Detection::TwoPort => &[0.0, PI],
            Detection::FourPort => &[0.0, PI, FRAC_PI_2, 3.0 * FRAC_PI_2],
        }
    }

    pub fn detectors(self) -> &'static [Detector] {
        match self {
            Detection::TwoPort => &[Detector::Plus, Detector::Minus],
            Detection::FourPort => {
                &[Detector::Plus, Detector::Minus, Detector::PlusQuadrature, Detector::MinusQuadrature]
            }
        }
    }

    pub fn ports(self) -> usize {
        self.offsets().len()
    }

    /// Mean counts per port: `|α_A + e^{io} α_B|² / ports`.
    pub fn port_means(self, alpha_a: C64, alpha_b: C64) -> Vec<f64> {
        let p = self.ports() as f64;
        self.offsets().iter().map(|&o| (alpha_a + C64::from_polar(1.0, o) * alpha_b).norm_sqr() / p).collect()
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

fn visibility(a: f64, b: f64) -> f64 {
    let s = a * a + b * b;
    if s == 0.0 {
        0.0
    } else {
        2.0 * a * b / s
    }
}

/// Per-photon likelihood of each port on the relative-phase grid,
/// `(1 + V cos(Δ + o))/2`.
fn port_likelihoods(det: Detection, v: f64, m: usize) -> Vec<Vec<f64>> {
    det.offsets().iter().map(|&o| (0..m).map(|k| 0.5 * (1.0 + v * (grid_angle(k, m) + o).cos())).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MolmerParams {
    pub mag_a: f64,
    pub mag_b: f64,
    pub n_packets: usize,
    pub trials: usize,
    pub grid: usize,
    pub detection: Detection,
    /// Longest detection count tracked in the collapse curve.
    pub max_detections: usize,
    /// `(detections, minimum median R)` pairs.
    pub thresholds: Vec<(usize, f64)>,
    pub phase_model: PhaseModel,
}

impl Default for MolmerParams {
    fn default() -> Self {
        Self {
            mag_a: 1.0,
            mag_b: 1.0,
            n_packets: 20,
            trials: 1000,
            grid: DEFAULT_GRID,
            detection: Detection::FourPort,
            max_detections: 20,
            thresholds: vec![(3, 0.5), (10, 0.9)],
            phase_model: PhaseModel::Mixture,
        }
    }
}

impl MolmerParams {
    fn validate(&self) -> Result<()> {
        for m in [self.mag_a, self.mag_b] {
            if !(m >= 0.0) || !m.is_finite() {
                return invalid(format!("packet magnitude must be finite and nonnegative, got {m}"));
            }
        }
        if self.n_packets == 0 {
            return invalid("need at least one packet");
        }
        if self.grid < MIN_GRID {
            return invalid(format!("phase grid must have at least {MIN_GRID} points"));
        }
        Ok(())
    }
}

struct MolmerTrial {
    delta: f64,
    /// Posterior resultant length after each detection.
    r_trace: Vec<f64>,
    counts: Vec<u64>,
    record: MeasurementRecord,
    posteriors: Vec<PhasePosterior>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MolmerOutcome {
    pub params: MolmerParams,
    pub seed: u64,
    /// `R` after each detection, per trial.
    pub r_traces: Vec<Vec<f64>>,
    /// True relative phase of each trial.
    pub deltas: Vec<f64>,
    /// Counts per port summed over trials.
    pub port_totals: Vec<u64>,
    pub first_record: MeasurementRecord,
    pub first_posteriors: Vec<PhasePosterior>,
}

/// Mølmer's two-beam experiment with uniformly unknown phases.
pub fn run_molmer(params: &MolmerParams, seed: u64) -> Result<MolmerOutcome> {
    params.validate()?;
    let prior = PhasePosterior::uniform(params.grid)?;
    let a = ExchangeableBeamState::new(params.mag_a, params.n_packets, prior.clone())?;
    let b = ExchangeableBeamState::new(params.mag_b, params.n_packets, prior)?;
    run_molmer_with(&a, &b, params, seed)
}

/// [`run_molmer`] with explicit beams; their posteriors set the phase
/// distribution. The magnitudes and packet count come from the beams.
pub fn run_molmer_with(
    beam_a: &ExchangeableBeamState,
    beam_b: &ExchangeableBeamState,
    params: &MolmerParams,
    seed: u64,
) -> Result<MolmerOutcome> {
    let params = MolmerParams {
        mag_a: beam_a.mag(),
        mag_b: beam_b.mag(),
        n_packets: beam_a.n_packets().min(beam_b.n_packets()),
        ..params.clone()
    };
    params.validate()?;
    let m = params.grid;
    let lik = port_likelihoods(params.detection, visibility(params.mag_a, params.mag_b), m);
    let trials = map_trials(params.trials, |t| -> Result<MolmerTrial> {
        let mut rng = trial_rng(seed, STREAM_MOLMER, t as u64);
        let phi_a = match params.phase_model {
            PhaseModel::Mixture => beam_a.sample_phase(&mut rng),
            PhaseModel::Fixed => 0.0,
        };
        let phi_b = beam_b.sample_phase(&mut rng);
        let (alpha_a, alpha_b) = (beam_a.label(phi_a), beam_b.label(phi_b));
        let means = params.detection.port_means(alpha_a, alpha_b);
        let keep_posteriors = t == 0;
        let mut post = PhasePosterior::uniform(m)?;
        let mut r_trace = Vec::new();
        let mut counts = vec![0u64; means.len()];
        let mut record = MeasurementRecord::new();
        let mut posteriors = Vec::new();
        if keep_posteriors {
            posteriors.push(post.clone());
        }
        for packet in 0..params.n_packets {
            let mut photons = Vec::new();
            for (port, &mean) in means.iter().enumerate() {
                let c = poisson(mean, &mut rng);
                counts[port] += c;
                photons.extend(std::iter::repeat_n(port, c as usize));
            }
            photons.shuffle(&mut rng);
            for port in photons {
                post = post.bayes_update(&lik[port])?;
                r_trace.push(post.circular_stats().resultant_length);
                if keep_posteriors {
                    record.push(packet, Outcome::Click(params.detection.detectors()[port]))?;
                    if posteriors.len() <= params.max_detections {
                        posteriors.push(post.clone());
                    }
                }
            }
        }
        let delta = (phi_b - phi_a).rem_euclid(std::f64::consts::TAU);
        Ok(MolmerTrial { delta, r_trace, counts, record, posteriors })
    });
    let trials = trials.into_iter().collect::<Result<Vec<_>>>()?;
    let mut port_totals = vec![0u64; params.detection.ports()];
    for t in &trials {
        for (acc, c) in port_totals.iter_mut().zip(&t.counts) {
            *acc += c;
        }
    }
    let mut trials = trials.into_iter();
    let (first_record, first_posteriors, mut r_traces, mut deltas) = match trials.next() {
        Some(t) => (t.record, t.posteriors, vec![t.r_trace], vec![t.delta]),
        None => (MeasurementRecord::new(), Vec::new(), Vec::new(), Vec::new()),
    };
    for t in trials {
        r_traces.push(t.r_trace);
        deltas.push(t.delta);
    }
    Ok(MolmerOutcome { params, seed, r_traces, deltas, port_totals, first_record, first_posteriors })
}

impl MolmerOutcome {
    /// Median `R` after `k` detections over the trials that reached `k`,
    /// and how many did.
    pub fn median_r_after(&self, k: usize) -> (f64, usize) {
        let vals: Vec<f64> = self.r_traces.iter().filter(|r| r.len() >= k).map(|r| r[k - 1]).collect();
        (median(&vals), vals.len())
    }

    pub fn mean_detections(&self) -> f64 {
        if self.r_traces.is_empty() {
            return 0.0;
        }
        self.r_traces.iter().map(|r| r.len() as f64).sum::<f64>() / self.r_traces.len() as f64
    }

    pub fn report(&self) -> ExperimentReport {
        let p = &self.params;
        let mut rep = ExperimentReport::new("molmer", Some(self.seed));
        rep.param("mag_a", p.mag_a)
            .param("mag_b", p.mag_b)
            .param("n_packets", p.n_packets)
            .param("trials", p.trials)
            .param("grid", p.grid)
            .param("detection", p.detection)
            .param("max_detections", p.max_detections)
            .param("thresholds", &p.thresholds)
            .param("phase_model", p.phase_model);
        let curve: Vec<(usize, f64, usize)> = (1..=p.max_detections)
            .map(|k| {
                let (med, n) = self.median_r_after(k);
                (k, med, n)
            })
            .collect();
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        rep.stat(
            "median_r",
            curve
                .iter()
                .map(|(k, med, n)| serde_json::json!({"detections": k, "median_r": finite(*med), "trials": n}))
                .collect::<Vec<_>>(),
        );
        rep.stat("mean_detections_per_trial", self.mean_detections());
        rep.stat("port_totals", &self.port_totals);
        for &(k, thr) in &p.thresholds {
            let name = format!("median_r_after_{k}");
            let (med, n) = self.median_r_after(k);
            if n == 0 {
                rep.verdict(Verdict::not_applicable(&name, format!("no trial reached {k} detections")));
            } else {
                rep.verdict(Verdict::above(&name, med, thr));
            }
        }
        rep.trace(Trace::from_rows(
            "collapse",
            &["detections", "median_r", "trials"],
            curve.iter().map(|(k, med, n)| vec![k.to_string(), med.to_string(), n.to_string()]),
        ));
        let mut buf = Vec::new();
        write_posterior_trace(&mut buf, &self.first_posteriors).expect("writing to memory");
        rep.trace(Trace { name: "posterior_trial0".into(), csv: String::from_utf8(buf).expect("ascii") });
        rep.trace(self.first_record.to_trace("record_trial0"));
        rep
    }
}

/// Phase model used for the packets after the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LockModel {
    /// One shared phase per beam for all packets.
    Exchangeable,
    /// Fresh independent phases for every packet (product of identical mixed
    /// states).
    IndependentPhases,
    /// Later packets share one relative phase drawn independently of the
    /// first packet's. Its pass rate is the chance level of the test.
    Decoy,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LockParams {
    pub mag_a: f64,
    pub mag_b: f64,
    pub n_packets: usize,
    pub trials: usize,
    pub grid: usize,
    pub detection: Detection,
    /// Test level.
    pub level: f64,
    /// Minimum pass rate required of the exchangeable model.
    pub min_pass_rate: f64,
}

impl Default for LockParams {
    fn default() -> Self {
        Self {
            mag_a: 2.0,
            mag_b: 2.0,
            n_packets: 20,
            trials: 500,
            grid: DEFAULT_GRID,
            detection: Detection::FourPort,
            level: 0.01,
            min_pass_rate: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelRate {
    pub model: LockModel,
    pub pass_rate: f64,
    /// `|mean e^{i(Δ̂_later - φ₀)}|` over trials.
    pub alignment: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LockOutcome {
    pub params: LockParams,
    pub seed: u64,
    pub critical_value: f64,
    /// Posterior mode of the relative phase after packet 1, first trial of
    /// the exchangeable model.
    pub phi0_trial0: f64,
    pub rates: Vec<ModelRate>,
}

struct LockTrial {
    pass: bool,
    phi0: f64,
    later_mode: Option<f64>,
}

fn log_lik(counts: &[u64], lik: &[Vec<f64>], m: usize) -> Vec<f64> {
    (0..m).map(|k| counts.iter().zip(lik).filter(|(c, _)| **c > 0).map(|(&c, l)| c as f64 * l[k].ln()).sum()).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

/// Phase-locking test: measure the relative phase on packet 1, then ask
/// whether the remaining packets are consistent with it.
///
/// Each photon lands in port `o` with probability `(1 + V cos(Δ + o))/P`.
/// The statistic `G = 2[max ℓ₁ + ℓ₂^sat - max(ℓ₁ + ℓ₂)]` compares a shared
/// `Δ` for both stages against a free `Δ` for packet 1 plus unconstrained
/// port frequencies for the later packets; under a shared phase it is
/// asymptotically `χ²` with `P - 1` degrees of freedom.
pub fn run_phase_locking(params: &LockParams, seed: u64) -> Result<LockOutcome> {
    MolmerParams {
        mag_a: params.mag_a,
        mag_b: params.mag_b,
        n_packets: params.n_packets,
        grid: params.grid,
        ..Default::default()
    }
    .validate()?;
    if !(params.level > 0.0 && params.level < 1.0) {
        return invalid(format!("test level must lie in (0, 1), got {}", params.level));
    }
    let m = params.grid;
    let det = params.detection;
    let crit = chi2_critical(det.ports() - 1, params.level)?;
    let lik: Vec<Vec<f64>> = det
        .offsets()
        .iter()
        .map(|&o| {
            let v = visibility(params.mag_a, params.mag_b);
            (0..m).map(|k| (1.0 + v * (grid_angle(k, m) + o).cos()) / det.ports() as f64).collect()
        })
        .collect();
    let prior = PhasePosterior::uniform(m)?;
    let beam_a = ExchangeableBeamState::new(params.mag_a, params.n_packets, prior.clone())?;
    let beam_b = ExchangeableBeamState::new(params.mag_b, params.n_packets, prior.clone())?;

    let run_model = |model: LockModel, stream: u64| -> Result<Vec<LockTrial>> {
        map_trials(params.trials, |t| -> Result<LockTrial> {
            let mut rng = trial_rng(seed, STREAM_LOCK * 16 + stream, t as u64);
            let phases = |rng: &mut rand_chacha::ChaCha8Rng| (beam_a.sample_phase(rng), beam_b.sample_phase(rng));
            let first = phases(&mut rng);
            let shared_later = match model {
                LockModel::Exchangeable => Some(first),
                LockModel::Decoy => Some(phases(&mut rng)),
                LockModel::IndependentPhases => None,
            };
            let counts = |(pa, pb): (f64, f64), rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u64> {
                det.port_means(beam_a.label(pa), beam_b.label(pb)).iter().map(|&mu| poisson(mu, rng)).collect()
            };
            let c1 = counts(first, &mut rng);
            let mut c2 = vec![0u64; det.ports()];
            for _ in 1..params.n_packets {
                let ph = shared_later.unwrap_or_else(|| phases(&mut rng));
                for (acc, c) in c2.iter_mut().zip(counts(ph, &mut rng)) {
                    *acc += c;
                }
            }
            let l1 = log_lik(&c1, &lik, m);
            let l2 = log_lik(&c2, &lik, m);
            let total: u64 = c2.iter().sum();
            let sat: f64 = c2.iter().filter(|c| **c > 0).map(|&c| c as f64 * (c as f64 / total as f64).ln()).sum();
            let joint: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a + b).collect();
            let max1 = l1[argmax(&l1)];
            let g = 2.0 * (max1 + sat - joint[argmax(&joint)]);
            let phi0 = prior.bayes_update_log(&l1)?.mode();
            let later_mode = (total > 0).then(|| grid_angle(argmax(&l2), m));
            Ok(LockTrial { pass: g < crit, phi0, later_mode })
        })
        .into_iter()
        .collect()
    };

    let mut rates = Vec::new();
    let mut phi0_trial0 = f64::NAN;
    for (stream, model) in
        [LockModel::Exchangeable, LockModel::IndependentPhases, LockModel::Decoy].into_iter().enumerate()
    {
        let trials = run_model(model, stream as u64)?;
        if model == LockModel::Exchangeable {
            phi0_trial0 = trials.first().map_or(f64::NAN, |t| t.phi0);
        }
        let n = trials.len().max(1) as f64;
        let pass_rate = trials.iter().filter(|t| t.pass).count() as f64 / n;
        let align: C64 =
            trials.iter().filter_map(|t| t.later_mode.map(|l| C64::from_polar(1.0, l - t.phi0))).sum::<C64>() / n;
        rates.push(ModelRate { model, pass_rate, alignment: align.norm() });
    }
    Ok(LockOutcome { params: params.clone(), seed, critical_value: crit, phi0_trial0, rates })
}

impl LockOutcome {
    pub fn rate(&self, model: LockModel) -> f64 {
        self.rates.iter().find(|r| r.model == model).map_or(f64::NAN, |r| r.pass_rate)
    }

    /// Chance rate plus three binomial standard errors.
    pub fn control_ceiling(&self) -> f64 {
        let chance = self.rate(LockModel::Decoy);
        chance + 3.0 * binomial_sigma(chance, self.params.trials.max(1))
    }

    pub fn report(&self) -> ExperimentReport {
        let p = &self.params;
        let mut rep = ExperimentReport::new("phase-lock", Some(self.seed));
        rep.param("mag_a", p.mag_a)
            .param("mag_b", p.mag_b)
            .param("n_packets", p.n_packets)
            .param("trials", p.trials)
            .param("grid", p.grid)
            .param("detection", p.detection)
            .param("level", p.level)
            .param("min_pass_rate", p.min_pass_rate);
        rep.stat("critical_value", self.critical_value)
            .stat("degrees_of_freedom", p.detection.ports() - 1)
            .stat("phi0_trial0", if self.phi0_trial0.is_finite() { Some(self.phi0_trial0) } else { None })
            .stat("models", &self.rates);
        if p.n_packets < 2 {
            let msg = "insufficient data: no packets after the locking packet";
            rep.warn(msg);
            rep.verdict(Verdict::not_applicable("exchangeable_locks", msg));
            rep.verdict(Verdict::not_applicable("control_at_chance", msg));
            return rep;
        }
        rep.verdict(Verdict::at_least("exchangeable_locks", self.rate(LockModel::Exchangeable), p.min_pass_rate));
        rep.verdict(Verdict::at_most(
            "control_at_chance",
            self.rate(LockModel::IndependentPhases),
            self.control_ceiling(),
        ));
        rep.trace(Trace::from_rows(
            "rates",
            &["model", "pass_rate", "alignment"],
            self.rates.iter().map(|r| {
                let name = serde_json::to_value(r.model).expect("enum").as_str().unwrap_or_default().to_string();
                vec![name, r.pass_rate.to_string(), r.alignment.to_string()]
            }),
        ));
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn port_means_conserve_photons() {
        let a = C64::from_polar(1.0, 0.3);
        let b = C64::from_polar(1.5, -1.1);
        for det in [Detection::TwoPort, Detection::FourPort] {
            let s: f64 = det.port_means(a, b).iter().sum();
            assert!((s - (1.0 + 2.25)).abs() < 1e-12);
        }
        // two-port: |α_A ± α_B|²/2
        let m = Detection::TwoPort.port_means(a, b);
        assert!((m[0] - (a + b).norm_sqr() / 2.0).abs() < 1e-12);
        assert!((m[1] - (a - b).norm_sqr() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dark_beams_never_click() {
        let params = MolmerParams { mag_a: 0.0, mag_b: 0.0, trials: 5, n_packets: 3, ..Default::default() };
        let out = run_molmer(&params, 1).unwrap();
        assert!(out.r_traces.iter().all(|r| r.is_empty()));
        assert_eq!(out.first_posteriors.len(), 1);
        assert_eq!(out.first_posteriors[0].circular_stats().resultant_length, 0.0);
        let rep = out.report();
        assert!(rep.verdicts.iter().all(|v| v.status == super::super::Status::NotApplicable));
    }

    #[test]
    fn fixed_relative_phase_rates_follow_fringe() {
        // Δ pinned by delta posteriors; port rates (1 ± cos Δ)/2 of the
        // two-port total, checked within 3σ of the Poisson counts
        let m = 256;
        let k = 37;
        let delta = grid_angle(k, m);
        let a = ExchangeableBeamState::new(1.0, 50, PhasePosterior::delta(m, 0).unwrap()).unwrap();
        let b = ExchangeableBeamState::new(1.0, 50, PhasePosterior::delta(m, k).unwrap()).unwrap();
        let params = MolmerParams { trials: 200, detection: Detection::TwoPort, ..Default::default() };
        let out = run_molmer_with(&a, &b, &params, 9).unwrap();
        let exposures = 200.0 * 50.0;
        for (port, sign) in [(0usize, 1.0), (1, -1.0)] {
            let want = exposures * (1.0 + sign * delta.cos());
            let got = out.port_totals[port] as f64;
            assert!((got - want).abs() < 3.0 * want.sqrt(), "port {port}: {got} vs {want}");
        }
        assert!(out.deltas.iter().all(|d| (d - delta).abs() < 1e-12));
    }

    #[test]
    fn collapse_is_fast_with_four_ports() {
        let params = MolmerParams { trials: 200, ..Default::default() };
        let out = run_molmer(&params, 3).unwrap();
        assert!(out.median_r_after(3).0 > 0.5);
        assert!(out.median_r_after(10).0 > 0.85);
    }

    #[test]
    fn molmer_is_deterministic() {
        let params = MolmerParams { trials: 20, ..Default::default() };
        let a = run_molmer(&params, 11).unwrap();
        let b = run_molmer(&params, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.deltas, run_molmer(&params, 12).unwrap().deltas);
    }

    #[test]
    fn single_packet_lock_is_not_applicable() {
        let params = LockParams { n_packets: 1, trials: 10, ..Default::default() };
        let rep = run_phase_locking(&params, 5).unwrap().report();
        assert!(rep.verdicts.iter().all(|v| v.status == super::super::Status::NotApplicable));
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn locking_separates_models() {
        let params = LockParams { trials: 200, ..Default::default() };
        let out = run_phase_locking(&params, 21).unwrap();
        assert!(out.rate(LockModel::Exchangeable) > 0.9);
        assert!(out.rate(LockModel::IndependentPhases) < 0.1);
        let ex = &out.rates[0];
        assert!(ex.alignment > 0.75, "{}", ex.alignment);
        assert!(out.rates[1].alignment < 0.3);
    }
}
