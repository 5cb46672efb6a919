use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{check_dim, FockOperator, FockVector, Modes};
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, CMatrix};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Values that single- and two-mode unitaries can act on.
pub trait FockState: Sized {
    fn dim(&self) -> usize;
    fn modes(&self) -> Modes;
    fn displaced(&self, displacer: &Displacer, beta: C64) -> Result<Self>;
    fn split(&self, bs: &BeamSplitter) -> Result<Self>;
}

impl FockState for FockVector {
    fn dim(&self) -> usize {
        FockVector::dim(self)
    }
    fn modes(&self) -> Modes {
        FockVector::modes(self)
    }
    fn displaced(&self, displacer: &Displacer, beta: C64) -> Result<Self> {
        displacer.apply(beta, self)
    }
    fn split(&self, bs: &BeamSplitter) -> Result<Self> {
        bs.apply(self)
    }
}

impl FockState for FockOperator {
    fn dim(&self) -> usize {
        FockOperator::dim(self)
    }
    fn modes(&self) -> Modes {
        FockOperator::modes(self)
    }
    fn displaced(&self, displacer: &Displacer, beta: C64) -> Result<Self> {
        displacer.apply_operator(beta, self)
    }
    fn split(&self, bs: &BeamSplitter) -> Result<Self> {
        bs.apply_operator(self)
    }
}

/// Displacement `D(β) = exp(βa† - β*a)` on a truncated mode.
///
/// The generator is exponentiated in a padded working space through the
/// spectral decomposition of the truncated momentum quadrature, which is
/// independent of `β`: `D(|β|e^{iθ}) = R(θ) exp(-i√2|β| p) R(θ)†` with
/// `R(θ) = e^{iθ n̂}`. Building a `Displacer` costs one eigensolve; each
/// application afterwards is `O(dim · work)`.
#[derive(Clone, Debug)]
pub struct Displacer {
    dim: usize,
    work: usize,
    freqs: Vec<f64>,
    modes: CMatrix,
}

impl Displacer {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let work = 2 * dim + 32;
        let mut p = DMatrix::<C64>::zeros(work, work);
        for n in 1..work {
            let s = (n as f64).sqrt() * FRAC_1_SQRT_2;
            p[(n - 1, n)] = C64::new(0.0, -s);
            p[(n, n - 1)] = C64::new(0.0, s);
        }
        let (freqs, modes) = hermitian_eigen(&p);
        Ok(Self { dim, work, freqs, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn apply_raw(&self, beta: C64, input: &[C64], out: &mut [C64]) {
        let (mag, theta) = beta.to_polar();
        let rotated: Vec<C64> =
            input.iter().enumerate().map(|(n, &v)| v * C64::from_polar(1.0, -theta * n as f64)).collect();
        let spectrum: Vec<C64> = (0..self.work)
            .map(|k| {
                let acc: C64 = rotated.iter().enumerate().map(|(n, &v)| self.modes[(n, k)].conj() * v).sum();
                acc * C64::from_polar(1.0, -std::f64::consts::SQRT_2 * mag * self.freqs[k])
            })
            .collect();
        for (n, o) in out.iter_mut().enumerate() {
            let acc: C64 = spectrum.iter().enumerate().map(|(k, s)| self.modes[(n, k)] * s).sum();
            *o = acc * C64::from_polar(1.0, theta * n as f64);
        }
    }

    pub fn apply(&self, beta: C64, state: &FockVector) -> Result<FockVector> {
        self.check(state.dim(), state.modes())?;
        let mut out = vec![ZERO; self.dim];
        self.apply_raw(beta, state.amplitudes().as_slice(), &mut out);
        FockVector::from_vec(self.dim, Modes::One, out)
    }

    pub fn apply_operator(&self, beta: C64, rho: &FockOperator) -> Result<FockOperator> {
        self.check(rho.dim(), rho.modes())?;
        let d = self.dim;
        let m = rho.matrix();
        // D ρ, column by column
        let mut left = DMatrix::<C64>::zeros(d, d);
        let mut col = vec![ZERO; d];
        for j in 0..d {
            let input: Vec<C64> = m.column(j).iter().copied().collect();
            self.apply_raw(beta, &input, &mut col);
            left.column_mut(j).copy_from_slice(&col);
        }
        // (D (Dρ)†)† = D ρ D†
        let lh = left.adjoint();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for j in 0..d {
            let input: Vec<C64> = lh.column(j).iter().copied().collect();
            self.apply_raw(beta, &input, &mut col);
            out.column_mut(j).copy_from_slice(&col);
        }
        FockOperator::new(d, Modes::One, out.adjoint())
    }

    /// Truncated `dim × dim` block of `D(β)`.
    pub fn matrix(&self, beta: C64) -> FockOperator {
        let d = self.dim;
        let mut out = DMatrix::<C64>::zeros(d, d);
        let mut col = vec![ZERO; d];
        let mut e = vec![ZERO; d];
        for j in 0..d {
            e.iter_mut().for_each(|x| *x = ZERO);
            e[j] = C64::new(1.0, 0.0);
            self.apply_raw(beta, &e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
        }
        FockOperator { dim: d, modes: Modes::One, mat: out }
    }

    fn check(&self, dim: usize, modes: Modes) -> Result<()> {
        if modes != Modes::One || dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("single mode, dim {}", self.dim),
                found: format!("{modes:?}, dim {dim}"),
            });
        }
        Ok(())
    }
}

/// One-shot `D(β)` on a state; builds a fresh [`Displacer`].
pub fn displacement_apply<S: FockState>(beta: C64, state: &S) -> Result<S> {
    let d = Displacer::new(state.dim())?;
    state.displaced(&d, beta)
}

/// Coherent amplitudes leaving the 50-50 beamsplitter: `(a, b) ↦
/// ((a + b)/√2, (b - a)/√2)`.
pub fn beamsplitter_amplitudes(a: C64, b: C64) -> (C64, C64) {
    ((a + b) * FRAC_1_SQRT_2, (b - a) * FRAC_1_SQRT_2)
}

/// Fixed 50-50 beamsplitter on two truncated modes.
///
/// Heisenberg convention `a → (a + b)/√2`, `b → (b - a)/√2`, equivalently
/// `a† ↦ (a† - b†)/√2` and `b† ↦ (a† + b†)/√2` on states. The image of
/// `|n, m⟩` is built by applying the transformed creation operators one
/// photon at a time; every intermediate vector is itself the normalized image
/// of a number state, which keeps the recursion stable. Components that
/// leave the truncated box (`j ≥ D` or `N - j ≥ D`) are dropped.
#[derive(Clone, Debug)]
pub struct BeamSplitter {
    dim: usize,
    // images[n * dim + m][j] = ⟨j, n+m-j| U |n, m⟩
    images: Vec<Vec<f64>>,
}

impl BeamSplitter {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut images: Vec<Vec<f64>> = vec![Vec::new(); dim * dim];
        images[0] = vec![1.0];
        for n in 0..dim {
            if n > 0 {
                let next = raise(&images[(n - 1) * dim], -1.0, n);
                images[n * dim] = next;
            }
            for m in 1..dim {
                let next = raise(&images[n * dim + m - 1], 1.0, m);
                images[n * dim + m] = next;
            }
        }
        Ok(Self { dim, images })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, dim: usize, modes: Modes) -> Result<()> {
        if modes != Modes::Two || dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("two modes, dim {}", self.dim),
                found: format!("{modes:?}, dim {dim}"),
            });
        }
        Ok(())
    }

    pub fn apply(&self, state: &FockVector) -> Result<FockVector> {
        self.check(state.dim(), state.modes())?;
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for n in 0..d {
            for m in 0..d {
                let c = state.amplitude2(n, m);
                if c == ZERO {
                    continue;
                }
                let total = n + m;
                for (j, &u) in self.images[n * d + m].iter().enumerate() {
                    let k = total - j;
                    if j < d && k < d {
                        out[j * d + k] += c * u;
                    }
                }
            }
        }
        FockVector::from_vec(d, Modes::Two, out)
    }

    /// Dense `D² × D²` matrix of the truncated unitary.
    pub fn matrix(&self) -> CMatrix {
        let d = self.dim;
        let mut u = DMatrix::<C64>::zeros(d * d, d * d);
        for n in 0..d {
            for m in 0..d {
                let total = n + m;
                for (j, &c) in self.images[n * d + m].iter().enumerate() {
                    let k = total - j;
                    if j < d && k < d {
                        u[(j * d + k, n * d + m)] = C64::new(c, 0.0);
                    }
                }
            }
        }
        u
    }

    pub fn apply_operator(&self, rho: &FockOperator) -> Result<FockOperator> {
        self.check(rho.dim(), rho.modes())?;
        let u = self.matrix();
        FockOperator::new(self.dim, Modes::Two, &u * rho.matrix() * u.adjoint())
    }
}

// Applies (a† + sign·b†)/√2 / √count to a vector over |j, N-j⟩, j = 0..=N.
fn raise(prev: &[f64], sign: f64, count: usize) -> Vec<f64> {
    let total = prev.len() - 1;
    let mut next = vec![0.0; total + 2];
    for (j, &c) in prev.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        // a†: |j, N-j⟩ → √(j+1) |j+1, N-j⟩
        next[j + 1] += c * ((j + 1) as f64).sqrt();
        // b†: |j, N-j⟩ → √(N-j+1) |j, N-j+1⟩
        next[j] += sign * c * ((total - j + 1) as f64).sqrt();
    }
    let scale = FRAC_1_SQRT_2 / (count as f64).sqrt();
    next.iter_mut().for_each(|x| *x *= scale);
    next
}

/// One-shot 50-50 beamsplitter on a two-mode state.
pub fn beamsplitter_apply<S: FockState>(state: &S) -> Result<S> {
    if state.modes() != Modes::Two {
        return Err(Error::DimensionMismatch { expected: "two-mode state".into(), found: "single-mode state".into() });
    }
    let bs = BeamSplitter::new(state.dim())?;
    state.split(&bs)
}

fn require_two_mode(state: &FockOperator) -> Result<()> {
    if state.modes() != Modes::Two {
        return Err(Error::DimensionMismatch {
            expected: "two-mode operator".into(),
            found: "single-mode operator".into(),
        });
    }
    Ok(())
}

/// Marginal of a two-mode operator on mode `keep` (0 or 1).
pub fn partial_trace(state: &FockOperator, keep: usize) -> Result<FockOperator> {
    require_two_mode(state)?;
    if keep > 1 {
        return invalid(format!("mode index {keep} out of range (0 or 1)"));
    }
    let d = state.dim();
    let m = state.matrix();
    let out = DMatrix::from_fn(d, d, |i, j| {
        (0..d).map(|k| if keep == 0 { m[(i * d + k, j * d + k)] } else { m[(k * d + i, k * d + j)] }).sum::<C64>()
    });
    FockOperator::new(d, Modes::One, out)
}

/// Partial transpose over mode 1: `⟨i,k|ρ^{T_B}|j,l⟩ = ⟨i,l|ρ|j,k⟩`.
pub fn partial_transpose(state: &FockOperator) -> Result<FockOperator> {
    require_two_mode(state)?;
    let d = state.dim();
    let m = state.matrix();
    let out = DMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, k) = (row / d, row % d);
        let (j, l) = (col / d, col % d);
        m[(i * d + l, j * d + k)]
    });
    FockOperator::new(d, Modes::Two, out)
}

fn pt_spectrum(state: &FockOperator) -> Result<Vec<f64>> {
    require_two_mode(state)?;
    let scale = state.matrix().iter().map(|x| x.norm()).fold(0.0, f64::max).max(1.0);
    let defect = state.hermiticity_defect();
    if defect > 1e-10 * scale {
        return invalid(format!("operator is not Hermitian (defect {defect:.2e})"));
    }
    let pt = partial_transpose(state)?;
    Ok(hermitian_eigenvalues(pt.matrix()))
}

/// Smallest eigenvalue of the partial transpose over mode 1. Negative values
/// certify entanglement.
pub fn partial_transpose_min_eig(state: &FockOperator) -> Result<f64> {
    Ok(pt_spectrum(state)?.first().copied().unwrap_or(0.0))
}

/// `log₂ ‖ρ^{T_B}‖₁` in bits.
pub fn log_negativity(state: &FockOperator) -> Result<f64> {
    let norm: f64 = pt_spectrum(state)?.iter().map(|x| x.abs()).sum();
    Ok(norm.log2().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, number_state, poisson_number_mixture, thermal_state, two_mode_squeezed};
    use std::f64::consts::PI;

    // Dense oracle: exp(A) by scaling and squaring with a long Taylor series,
    // independent of the spectral construction used above.
    fn expm(a: &CMatrix) -> CMatrix {
        let norm = a.iter().map(|x| x.norm()).sum::<f64>();
        let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a.unscale(2f64.powi(s));
        let n = a.nrows();
        let mut term = CMatrix::identity(n, n);
        let mut acc = term.clone();
        for k in 1..40 {
            term = &term * &scaled / C64::new(k as f64, 0.0);
            acc += &term;
        }
        for _ in 0..s {
            acc = &acc * &acc;
        }
        acc
    }

    fn annihilation(d: usize) -> CMatrix {
        DMatrix::from_fn(d, d, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { ZERO })
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let beta = C64::new(0.7, -0.4);
        let out = displacement_apply(beta, &number_state(0, 30).unwrap()).unwrap();
        let want = coherent_state(beta, 30).unwrap();
        assert!((out.amplitudes() - want.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn displacement_composition_law() {
        let d = Displacer::new(40).unwrap();
        let alpha = C64::new(0.8, 0.5);
        let beta = C64::new(-0.3, 1.1);
        let out = d.apply(beta, &coherent_state(alpha, 40).unwrap()).unwrap();
        let phase = C64::from_polar(1.0, (beta * alpha.conj()).im);
        let want = coherent_state(alpha + beta, 40).unwrap();
        let overlap = want.inner(&out);
        assert!((overlap - phase).norm() < 1e-9, "{overlap} vs {phase}");
        assert!(1.0 - overlap.norm_sqr() < 1e-9);
    }

    #[test]
    fn displacement_inverse_pair() {
        let d = Displacer::new(25).unwrap();
        let beta = C64::from_polar(1.2, 2.0);
        let psi = coherent_state(C64::new(0.3, 0.2), 25).unwrap();
        let back = d.apply(-beta, &d.apply(beta, &psi).unwrap()).unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-10);

        // high number states leak past the cutoff when displaced; keep their
        // weight negligible
        let d = Displacer::new(40).unwrap();
        let rho = poisson_number_mixture(0.5, 40).unwrap();
        let back = d.apply_operator(-beta, &d.apply_operator(beta, &rho).unwrap()).unwrap();
        let err = crate::linalg::max_abs_diff(back.matrix(), rho.matrix());
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn displacement_matches_dense_expm_on_low_block() {
        let d = 14;
        let big = 70;
        let beta = C64::new(0.6, -0.9);
        let a = annihilation(big);
        let gen = a.adjoint().scale(1.0) * beta - &a * beta.conj();
        let oracle = expm(&gen);
        let ours = Displacer::new(d).unwrap().matrix(beta);
        for i in 0..8 {
            for j in 0..8 {
                assert!((ours.entry(i, j) - oracle[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn displacement_unitary_on_well_truncated_block() {
        let u = Displacer::new(30).unwrap().matrix(C64::new(1.0, 0.5));
        let m = u.matrix();
        let prod = m.adjoint() * m;
        for i in 0..10 {
            for j in 0..10 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    fn two_mode_bs_oracle(d: usize) -> CMatrix {
        // U = exp(θ(a†b - ab†)) with θ = π/4 realizes a† → (a† - b†)/√2
        let a = annihilation(d);
        let id = CMatrix::identity(d, d);
        let a1 = a.kronecker(&id);
        let b1 = id.kronecker(&a);
        let gen = (a1.adjoint() * &b1 - &a1 * b1.adjoint()) * C64::new(PI / 4.0, 0.0);
        expm(&gen)
    }

    #[test]
    fn beamsplitter_single_photon_convention() {
        let d = 4;
        let one_zero = number_state(1, d).unwrap().tensor(&number_state(0, d).unwrap()).unwrap();
        let out = beamsplitter_apply(&one_zero).unwrap();
        assert!((out.amplitude2(1, 0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amplitude2(0, 1).re + FRAC_1_SQRT_2).abs() < 1e-15);

        let oracle = two_mode_bs_oracle(d);
        let col: Vec<C64> = oracle.column(d).iter().copied().collect();
        assert!((col[d] - out.amplitude2(1, 0)).norm() < 1e-10);
        assert!((col[1] - out.amplitude2(0, 1)).norm() < 1e-10);
    }

    #[test]
    fn beamsplitter_vacuum_fixed() {
        let vv = number_state(0, 5).unwrap().tensor(&number_state(0, 5).unwrap()).unwrap();
        assert_eq!(beamsplitter_apply(&vv).unwrap(), vv);
    }

    #[test]
    fn beamsplitter_maps_coherent_products() {
        let d = 24;
        let (a, b) = (C64::new(0.9, 0.2), C64::new(-0.4, 0.6));
        let input = coherent_state(a, d).unwrap().tensor(&coherent_state(b, d).unwrap()).unwrap();
        let out = beamsplitter_apply(&input).unwrap();
        let (a2, b2) = beamsplitter_amplitudes(a, b);
        let want = coherent_state(a2, d).unwrap().tensor(&coherent_state(b2, d).unwrap()).unwrap();
        assert!((out.amplitudes() - want.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn beamsplitter_agrees_with_dense_exponential() {
        // compare on states with total photon number < d, where truncation of
        // the generator is harmless
        for d in [6usize, 12] {
            let ours = BeamSplitter::new(d).unwrap().matrix();
            let oracle = two_mode_bs_oracle(d);
            for col in 0..d * d {
                let (n, m) = (col / d, col % d);
                if n + m >= d {
                    continue;
                }
                for row in 0..d * d {
                    assert!((ours[(row, col)] - oracle[(row, col)]).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn beamsplitter_rejects_single_mode() {
        assert!(matches!(
            beamsplitter_apply(&coherent_state(C64::new(1.0, 0.0), 5).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tmss_matches_squeeze_exponential() {
        // r(a†b† - ab) leaves span{|n,n⟩} invariant: a†b†|n,n⟩ = (n+1)|n+1,n+1⟩
        let d = 16;
        let big = 80;
        let r = 0.5;
        let gen = DMatrix::from_fn(big, big, |i, j| {
            if i == j + 1 {
                C64::new(r * i as f64, 0.0)
            } else if j == i + 1 {
                C64::new(-r * j as f64, 0.0)
            } else {
                ZERO
            }
        });
        let oracle = expm(&gen);
        let ours = two_mode_squeezed(r, 0.0, d).unwrap();
        for n in 0..d {
            assert!((oracle[(n, 0)] - ours.amplitude2(n, n)).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn partial_trace_of_product_and_tmss() {
        let rho = poisson_number_mixture(0.7, 8).unwrap();
        let sigma = thermal_state(0.3, 8).unwrap();
        let prod = rho.tensor(&sigma).unwrap();
        // marginals carry the other factor's truncated trace
        let want0 = rho.scaled(sigma.trace().re);
        let want1 = sigma.scaled(rho.trace().re);
        assert!(crate::linalg::max_abs_diff(partial_trace(&prod, 0).unwrap().matrix(), want0.matrix()) < 1e-15);
        assert!(crate::linalg::max_abs_diff(partial_trace(&prod, 1).unwrap().matrix(), want1.matrix()) < 1e-15);

        let r: f64 = 0.4;
        let t = two_mode_squeezed(r, 0.7, 30).unwrap().to_operator();
        let thermal = thermal_state(r.sinh().powi(2), 30).unwrap();
        for keep in 0..2 {
            let m = partial_trace(&t, keep).unwrap();
            assert!(crate::linalg::max_abs_diff(m.matrix(), thermal.matrix()) < 1e-12);
        }
        assert!(partial_trace(&t, 2).is_err());
    }

    #[test]
    fn maximally_correlated_marginal() {
        let d = 5;
        let p = [0.4, 0.3, 0.2, 0.1, 0.0];
        let mut m = DMatrix::<C64>::zeros(d * d, d * d);
        for (n, &w) in p.iter().enumerate() {
            m[(n * d + n, n * d + n)] = C64::new(w, 0.0);
        }
        let rho = FockOperator::new(d, Modes::Two, m).unwrap();
        let red = partial_trace(&rho, 0).unwrap();
        for (n, &w) in p.iter().enumerate() {
            assert_eq!(red.entry(n, n).re, w);
        }
    }

    #[test]
    fn ppt_of_product_and_tmss() {
        let prod = poisson_number_mixture(1.0, 8).unwrap().tensor(&thermal_state(0.5, 8).unwrap()).unwrap();
        assert!(partial_transpose_min_eig(&prod).unwrap() >= -1e-12);

        let t = two_mode_squeezed(0.3, 0.0, 12).unwrap().to_operator();
        let min = partial_transpose_min_eig(&t).unwrap();
        // pure-state PT spectrum: ±√(λ_n λ_m), most negative -λ_0 λ_1
        let r: f64 = 0.3;
        let lam0 = 1.0 / r.cosh().powi(2);
        let lam1 = lam0 * r.tanh().powi(2);
        assert!((min + (lam0 * lam1).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn ppt_rejects_non_hermitian() {
        let d = 3;
        let mut m = DMatrix::<C64>::zeros(d * d, d * d);
        m[(0, 1)] = C64::new(1.0, 0.0);
        let op = FockOperator::new(d, Modes::Two, m).unwrap();
        assert!(matches!(partial_transpose_min_eig(&op), Err(Error::InvalidArgument(_))));
    }
}
