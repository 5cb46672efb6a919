use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{check_dim, FockOperator, FockVector, Modes};
use crate::error::{invalid, Result};

pub fn vacuum(dim: usize) -> Result<FockVector> {
    number_state(0, dim)
}

pub fn number_state(n: usize, dim: usize) -> Result<FockVector> {
    check_dim(dim)?;
    if n >= dim {
        return invalid(format!("number state |{n}⟩ outside truncation {dim}"));
    }
    let mut amps = DVector::zeros(dim);
    amps[n] = C64::new(1.0, 0.0);
    FockVector::new(dim, Modes::One, amps)
}

/// `|α⟩` truncated to `dim` levels, amplitudes `e^{-|α|²/2} αⁿ/√n!`.
///
/// The truncated vector is not renormalized; `truncation_loss()` reports the
/// Poisson tail beyond `dim - 1`.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<FockVector> {
    check_dim(dim)?;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return invalid("coherent amplitude must be finite");
    }
    let mut amps = DVector::zeros(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    FockVector::new(dim, Modes::One, amps)
}

/// Heuristic check for whether `|α|²` sits comfortably inside the
/// truncation: `|α|² ≤ D - 6√D`.
pub fn coherent_fits(alpha: C64, dim: usize) -> bool {
    let d = dim as f64;
    alpha.norm_sqr() <= d - 6.0 * d.sqrt()
}

fn poisson_weights(mean: f64, dim: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(dim);
    let mut p = (-mean).exp();
    w.push(p);
    for n in 1..dim {
        p *= mean / n as f64;
        w.push(p);
    }
    w
}

/// Number-diagonal Poisson mixture `e^{-|α|²} Σ |α|^{2n}/n! |n⟩⟨n|`.
pub fn poisson_number_mixture(mag: f64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    if !(mag >= 0.0) || !mag.is_finite() {
        return invalid(format!("magnitude must be a finite nonnegative number, got {mag}"));
    }
    let w = poisson_weights(mag * mag, dim);
    let mat = DMatrix::from_diagonal(&DVector::from_iterator(dim, w.into_iter().map(|p| C64::new(p, 0.0))));
    FockOperator::new(dim, Modes::One, mat)
}

/// Thermal state with mean photon number `nbar`.
pub fn thermal_state(nbar: f64, dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    if !(nbar >= 0.0) {
        return invalid(format!("mean photon number must be nonnegative, got {nbar}"));
    }
    let q = nbar / (1.0 + nbar);
    let diag = DVector::from_fn(dim, |n, _| C64::new(q.powi(n as i32) / (1.0 + nbar), 0.0));
    FockOperator::new(dim, Modes::One, DMatrix::from_diagonal(&diag))
}

/// Average of `|α e^{iφ_k}⟩⟨α e^{iφ_k}|` over the uniform grid
/// `φ_k = 2πk/points`.
///
/// Entry `(m, n)` of the integrand oscillates as `e^{i(m-n)φ}` with
/// `|m - n| ≤ D - 1`, so `points ≥ 2D - 1` reproduces the continuous phase
/// integral exactly. Fewer points alias: only off-diagonals with
/// `(m - n) mod points = 0` survive.
pub fn phase_average(mag: f64, dim: usize, points: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    if !(mag >= 0.0) || !mag.is_finite() {
        return invalid(format!("magnitude must be a finite nonnegative number, got {mag}"));
    }
    if points == 0 {
        return invalid("phase grid needs at least one point");
    }
    let mut acc = FockOperator::zeros(dim, Modes::One)?;
    let w = 1.0 / points as f64;
    for k in 0..points {
        let phi = 2.0 * PI * k as f64 / points as f64;
        let psi = coherent_state(C64::from_polar(mag, phi), dim)?;
        acc.add_outer_weighted(&psi, w);
    }
    Ok(acc)
}

/// Two-mode squeezed vacuum `Σ (e^{2iφ} tanh r)ⁿ |n,n⟩ / cosh r`.
///
/// The pump phase enters as `2φ` per photon pair, i.e. the state produced by
/// a pump whose own coherent phase is `φ`.
pub fn two_mode_squeezed(r: f64, phi: f64, dim: usize) -> Result<FockVector> {
    check_dim(dim)?;
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("squeeze parameter must be finite and nonnegative, got {r}"));
    }
    let lambda = C64::from_polar(r.tanh(), 2.0 * phi);
    let mut amps = DVector::zeros(dim * dim);
    let mut c = C64::new(1.0 / r.cosh(), 0.0);
    for n in 0..dim {
        amps[n * dim + n] = c;
        c *= lambda;
    }
    FockVector::new(dim, Modes::Two, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state_metrics;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let v = coherent_state(C64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(v.amplitude(0), C64::new(1.0, 0.0));
        assert!((1..10).all(|n| v.amplitude(n) == C64::new(0.0, 0.0)));
    }

    #[test]
    fn coherent_mean_photon_number() {
        // ⟨n⟩ = Σ n e^{-1}/n! over n < 30, summed independently of the recursion
        let oracle: f64 = (0..30).map(|n| n as f64 * (-1.0f64).exp() / factorial(n)).sum();
        let v = coherent_state(C64::new(1.0, 0.0), 30).unwrap();
        assert!((v.mean_photons() - oracle).abs() < 1e-12);
        assert!((v.mean_photons() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_norm_with_complex_amplitude() {
        let alpha = C64::from_polar(2.0, PI / 4.0);
        let v = coherent_state(alpha, 40).unwrap();
        assert!(v.truncation_loss().abs() < 1e-10);
        // closed-form amplitudes
        for n in [0usize, 3, 7] {
            let want = (-2.0f64).exp() * alpha.powu(n as u32) / factorial(n).sqrt();
            assert!((v.amplitude(n) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn rejects_tiny_dimension() {
        assert!(coherent_state(C64::new(1.0, 0.0), 1).is_err());
        assert!(poisson_number_mixture(1.0, 0).is_err());
    }

    #[test]
    fn poisson_mixture_matches_pmf() {
        let rho = poisson_number_mixture(1.0, 30).unwrap();
        for n in 0..30 {
            let pmf = (-1.0f64).exp() / factorial(n);
            assert!((rho.entry(n, n).re - pmf).abs() < 1e-15);
            for m in 0..30 {
                if m != n {
                    assert_eq!(rho.entry(n, m), C64::new(0.0, 0.0));
                }
            }
        }
        let tail: f64 = (30..60).map(|n| (-1.0f64).exp() / factorial(n)).sum();
        assert!((rho.truncation_loss() - tail).abs() < 1e-15);
        assert!(rho.truncation_loss() < 1e-12);
    }

    #[test]
    fn poisson_mixture_rejects_negative() {
        assert!(poisson_number_mixture(-0.1, 10).is_err());
    }

    #[test]
    fn single_point_average_of_vacuum() {
        let rho = phase_average(0.0, 10, 1).unwrap();
        assert_eq!(rho, vacuum(10).unwrap().to_operator());
    }

    #[test]
    fn phase_average_is_poisson_on_fine_grid() {
        let avg = phase_average(1.0, 20, 40).unwrap();
        let poi = poisson_number_mixture(1.0, 20).unwrap();
        let m = state_metrics(&avg, &poi).unwrap();
        assert!(m.trace_distance < 1e-12, "{}", m.trace_distance);
    }

    #[test]
    fn three_point_grid_aliases() {
        let avg = phase_average(1.0, 20, 3).unwrap();
        for m in 0..20usize {
            for n in 0..20usize {
                let v = avg.entry(m, n).norm();
                if m.abs_diff(n) % 3 == 0 {
                    assert!(v > 0.0 || m.max(n) > 15);
                } else {
                    assert!(v < 1e-15, "({m},{n}) = {v}");
                }
            }
        }
        assert!(avg.entry(0, 3).norm() > 1e-3);
    }

    #[test]
    fn tmss_vacuum_and_schmidt_law() {
        let v = two_mode_squeezed(0.0, 1.3, 8).unwrap();
        assert!((v.amplitude2(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v.norm_sqr() - 1.0).abs() < 1e-15);

        let s = two_mode_squeezed(0.5, 0.0, 16).unwrap();
        for n in 0..16 {
            let want = 0.5f64.tanh().powi(n as i32) / 0.5f64.cosh();
            assert!((s.amplitude2(n, n).re - want).abs() < 1e-12);
        }
        // truncated closed form Σ_{n<16} n (1-λ²) λ^{2n}, λ = tanh r; the
        // untruncated sinh²r differs by the tail ≈ 3.0e-10
        let lam2 = 0.5f64.tanh().powi(2);
        let truncated: f64 = (0..16).map(|n| n as f64 * (1.0 - lam2) * lam2.powi(n)).sum();
        assert!((s.mean_photons() - truncated).abs() < 1e-13);
        assert!((s.mean_photons() - 0.5f64.sinh().powi(2)).abs() < 5e-10);
        let wide = two_mode_squeezed(0.5, 0.0, 24).unwrap();
        assert!((wide.mean_photons() - 0.5f64.sinh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn tmss_phase_convention() {
        let phi = 0.3;
        let s = two_mode_squeezed(0.5, phi, 6).unwrap();
        let ratio = s.amplitude2(2, 2) / s.amplitude2(1, 1);
        assert!((ratio.arg() - 2.0 * phi).abs() < 1e-12);
    }

    #[test]
    fn tmss_rejects_negative_r() {
        assert!(two_mode_squeezed(-0.1, 0.0, 8).is_err());
    }
}
