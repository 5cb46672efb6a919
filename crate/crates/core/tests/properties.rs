//! Cross-module invariants.

use laserlab::experiments::{
    check_separability, run_distillation, run_molmer, run_teleportation, stats, DistillParams, MolmerParams,
    PhaseModel, TeleportParams,
};
use laserlab::fock::{
    beamsplitter_apply, coherent_state, phase_average, poisson_number_mixture, state_metrics, Displacer,
};
use laserlab::inference::PhasePosterior;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn mean_r_after(out: &laserlab::experiments::MolmerOutcome, k: usize) -> (f64, f64) {
    let v: Vec<f64> = out.r_traces.iter().filter(|r| r.len() >= k).map(|r| r[k - 1]).collect();
    (stats::mean(&v), stats::std_err(&v))
}

#[test]
fn molmer_statistics_ignore_the_global_phase() {
    let base = MolmerParams { trials: 600, ..Default::default() };
    let mix = run_molmer(&base, 31).unwrap();
    let pure = run_molmer(&MolmerParams { phase_model: PhaseModel::Fixed, ..base }, 32).unwrap();
    for k in [1, 3, 10] {
        let (a, sa) = mean_r_after(&mix, k);
        let (b, sb) = mean_r_after(&pure, k);
        assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "k={k}: {a} vs {b}");
    }
}

#[test]
fn separable_without_and_entangled_with_the_local_oscillator() {
    let (r, dim) = (0.3, 12);
    assert!(check_separability(r, dim, None).unwrap().report().passed());
    let params = DistillParams { r, dim, n_lo: 16, trials: 40, sweep: vec![0], ..Default::default() };
    let out = run_distillation(&params, 12).unwrap();
    assert_eq!(out.at(0).unwrap().mean_log_negativity, 0.0);
    let entangled = out.at(16).unwrap();
    assert!(entangled.mean_log_negativity > 0.9 * out.benchmark);
}

#[test]
fn bob_sees_thermal_light_whatever_the_input() {
    for beta in [C64::new(0.0, 0.0), C64::new(1.5, -0.5)] {
        let params = TeleportParams { beta, trials: 6000, dim: 40, ..Default::default() };
        let out = run_teleportation(&params, 77).unwrap();
        assert!(out.no_signal_distance < 0.02, "{beta}: {}", out.no_signal_distance);
    }
}

#[test]
fn sharp_posterior_makes_packets_pure() {
    let post = PhasePosterior::delta(128, 17).unwrap();
    let beam = laserlab::beam::ExchangeableBeamState::new(1.0, 3, post.clone()).unwrap();
    let rho = beam.reduced_state(1, 16).unwrap();
    let pure = coherent_state(beam.label(post.angle(17)), 16).unwrap().to_operator();
    assert!(state_metrics(&rho, &pure).unwrap().fidelity > 0.999_999);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fine_grid_phase_average_is_poisson(mag in 0.0f64..2.0, extra in 0usize..6) {
        let dim = (mag * mag + 6.0 * mag + 10.0).ceil() as usize;
        let grid = 2 * dim - 1 + extra;
        let d = state_metrics(&phase_average(mag, dim, grid).unwrap(), &poisson_number_mixture(mag, dim).unwrap())
            .unwrap()
            .trace_distance;
        prop_assert!(d < 1e-10);
    }

    #[test]
    fn beamsplitter_maps_coherent_products(re_a in -1.5f64..1.5, im_a in -1.5f64..1.5, re_b in -1.5f64..1.5, im_b in -1.5f64..1.5) {
        // a† → (a† - b†)/√2, b† → (a† + b†)/√2 on states: |α,β⟩ → |(α+β)/√2, (β-α)/√2⟩
        let dim = 24;
        let (a, b) = (C64::new(re_a, im_a), C64::new(re_b, im_b));
        let input = coherent_state(a, dim).unwrap().tensor(&coherent_state(b, dim).unwrap()).unwrap();
        let out = beamsplitter_apply(&input).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = coherent_state((a + b) * s, dim).unwrap().tensor(&coherent_state((b - a) * s, dim).unwrap()).unwrap();
        // the truncated input only reaches total photon numbers below D
        for n in 0..dim {
            for m in 0..dim - n {
                prop_assert!((out.amplitude2(n, m) - want.amplitude2(n, m)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacing_vacuum_gives_coherent_state(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let dim = 30;
        let beta = C64::new(re, im);
        let d = Displacer::new(dim).unwrap();
        let out = d.apply(beta, &coherent_state(C64::new(0.0, 0.0), dim).unwrap()).unwrap();
        let want = coherent_state(beta, dim).unwrap();
        prop_assert!((out.amplitudes() - want.amplitudes()).norm() < 1e-9);
    }
}
