//! Multimode Fock spaces, bosonic operator matrices, and the Bogoliubov
//! diagonalization of the purely photonic quadratic Hamiltonian.
//!
//! # Phase convention
//!
//! Assembly works in a per-mode phase-rotated Fock basis, `|n> -> i^n |n>`.
//! Under this local rotation every light-matter coupling of the gauge family
//! becomes real, so Hamiltonians are real symmetric and all downstream linear
//! algebra stays in real arithmetic. Spectra, same-gauge overlaps and Schmidt
//! entropies are invariant under the rotation (it is a diagonal unitary on
//! the photonic factor alone). Concretely:
//!
//! * `b + b^dag`            -> `-i (bdag - b)`  (imaginary antisymmetric)
//! * `i (b^dag - b)`        -> `b + b^dag`      (real symmetric)
//!
//! [`mode_operator`] returns the standard (unrotated) complex matrices;
//! [`quadrature_sym`] and [`ladder_antisym`] return the real matrices the
//! rotated-basis assembly is built from. A unit test pins the intertwining
//! relation between the two conventions.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hamiltonian::GaugeVector;
use crate::linalg::sym_eigen;
use crate::sparse::Coo;
use crate::Real;

/// One cavity mode: frequency and vacuum field amplitude, absolute units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec<T> {
    pub omega: T,
    pub amplitude: T,
}

impl<T: Real> ModeSpec<T> {
    pub fn new(omega: T, amplitude: T) -> Result<Self> {
        if !(omega > T::zero()) {
            return Err(Error::InvalidConfig(format!("mode frequency must be positive, got {omega}")));
        }
        if !(amplitude >= T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "vacuum amplitude must be non-negative, got {amplitude}"
            )));
        }
        Ok(ModeSpec { omega, amplitude })
    }
}

/// Truncated multimode Fock space with row-major index maps, mode 0 slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    cutoffs: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

/// Index maps between occupation tuples and flat indices.
pub fn build_fock_space(cutoffs: &[usize], budget: usize) -> Result<FockSpace> {
    if cutoffs.is_empty() {
        return Err(Error::InvalidConfig("at least one mode is required".into()));
    }
    for (k, &c) in cutoffs.iter().enumerate() {
        if c < 1 {
            return Err(Error::InvalidConfig(format!("cutoff of mode {k} must be >= 1, got {c}")));
        }
    }
    let mut dim = 1usize;
    for &c in cutoffs {
        dim = dim
            .checked_mul(c + 1)
            .ok_or(Error::CapacityExceeded { dim: usize::MAX, budget })?;
    }
    if dim > budget {
        return Err(Error::CapacityExceeded { dim, budget });
    }
    let n = cutoffs.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * (cutoffs[k + 1] + 1);
    }
    Ok(FockSpace { cutoffs: cutoffs.to_vec(), strides, dim })
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn flat_index(&self, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.cutoffs.len());
        occupation.iter().zip(&self.strides).map(|(&n, &s)| n * s).sum()
    }

    pub fn occupation_of(&self, k: usize, flat: usize) -> usize {
        (flat / self.strides[k]) % (self.cutoffs[k] + 1)
    }

    pub fn occupation(&self, flat: usize) -> Vec<usize> {
        (0..self.cutoffs.len()).map(|k| self.occupation_of(k, flat)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilate,
    Create,
    /// `b + b^dag`
    PositionQuadrature,
    /// `i (b^dag - b)`
    MomentumQuadrature,
    Number,
}

/// Standard truncated boson matrix of mode `k`, embedded in the full Fock
/// space by Kronecker structure: `<n-1|b|n> = sqrt(n)`.
pub fn mode_operator<T: Real>(space: &FockSpace, k: usize, kind: OperatorKind) -> Coo<Complex<T>> {
    assert!(k < space.n_modes(), "mode index {k} out of range");
    let mut op = Coo::new(space.dim(), space.dim());
    let stride = space.strides[k];
    let re = |x: T| Complex::new(x, T::zero());
    let im = |x: T| Complex::new(T::zero(), x);
    for f in 0..space.dim() {
        let n = space.occupation_of(k, f);
        let down = T::of(n as f64).sqrt();
        let up = T::of((n + 1) as f64).sqrt();
        match kind {
            OperatorKind::Annihilate => {
                if n > 0 {
                    op.push(f - stride, f, re(down));
                }
            }
            OperatorKind::Create => {
                if n < space.cutoffs[k] {
                    op.push(f + stride, f, re(up));
                }
            }
            OperatorKind::PositionQuadrature => {
                if n > 0 {
                    op.push(f - stride, f, re(down));
                }
                if n < space.cutoffs[k] {
                    op.push(f + stride, f, re(up));
                }
            }
            OperatorKind::MomentumQuadrature => {
                if n > 0 {
                    op.push(f - stride, f, im(-down));
                }
                if n < space.cutoffs[k] {
                    op.push(f + stride, f, im(up));
                }
            }
            OperatorKind::Number => {
                if n > 0 {
                    op.push(f, f, re(T::of(n as f64)));
                }
            }
        }
    }
    op
}

/// `b + b^dag` of mode `k` as a real symmetric matrix. In the phase-rotated
/// basis this is the matrix of the momentum quadrature `i (b^dag - b)`.
pub fn quadrature_sym<T: Real>(space: &FockSpace, k: usize) -> Coo<T> {
    let mut op = Coo::new(space.dim(), space.dim());
    let stride = space.strides[k];
    for f in 0..space.dim() {
        let n = space.occupation_of(k, f);
        if n < space.cutoffs[k] {
            let v = T::of((n + 1) as f64).sqrt();
            op.push(f + stride, f, v);
            op.push(f, f + stride, v);
        }
    }
    op
}

/// `b^dag - b` of mode `k` as a real antisymmetric matrix. In the
/// phase-rotated basis, `b + b^dag` is represented by `-i` times this matrix.
pub fn ladder_antisym<T: Real>(space: &FockSpace, k: usize) -> Coo<T> {
    let mut op = Coo::new(space.dim(), space.dim());
    let stride = space.strides[k];
    for f in 0..space.dim() {
        let n = space.occupation_of(k, f);
        if n < space.cutoffs[k] {
            let v = T::of((n + 1) as f64).sqrt();
            op.push(f + stride, f, v);
            op.push(f, f + stride, -v);
        }
    }
    op
}

/// Diagonal of the bare photon energy `sum_k omega_k n_k`.
pub fn photon_energy_diag<T: Real>(space: &FockSpace, modes: &[ModeSpec<T>]) -> Vec<T> {
    assert_eq!(modes.len(), space.n_modes());
    (0..space.dim())
        .map(|f| {
            modes
                .iter()
                .enumerate()
                .map(|(k, m)| m.omega * T::of(space.occupation_of(k, f) as f64))
                .sum()
        })
        .collect()
}

/// Purely photonic part of the gauge-parametrized Hamiltonian in the
/// phase-rotated real basis:
///
/// `H_p = (1/2) [sum_k (1-eta_k) A_k (b_k + b_k^dag)]^2 + sum_k omega_k n_k`
///
/// The squared bracket becomes `-(1/2) [sum_k c_k (bdag_k - b_k)]^2` after the
/// rotation, which is real symmetric and keeps every mode-mode cross coupling.
pub fn photon_block<T: Real>(space: &FockSpace, modes: &[ModeSpec<T>], gauge: &GaugeVector<T>) -> Result<Coo<T>> {
    if modes.len() != space.n_modes() || gauge.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "photon block: {} modes, {} cutoffs, {} gauge entries",
            modes.len(),
            space.n_modes(),
            gauge.len()
        )));
    }
    let mut rsum = Coo::new(space.dim(), space.dim());
    for (k, (mode, &eta)) in modes.iter().zip(gauge.etas()).enumerate() {
        let c = (T::one() - eta) * mode.amplitude;
        if c != T::zero() {
            rsum.add_assign(&ladder_antisym(space, k).scaled(c));
        }
    }
    let mut block = rsum.matmul(&rsum).scaled(T::of(-0.5));
    block.add_assign(&Coo::from_diagonal(&photon_energy_diag(space, modes)));
    Ok(block)
}

/// Normal-mode frequencies and the symplectic transformation diagonalizing
/// the quadratic photonic Hamiltonian.
#[derive(Debug, Clone)]
pub struct BogoliubovResult<T> {
    /// Normal-mode frequencies, ascending.
    pub frequencies: Vec<T>,
    /// Real symplectic `2K x 2K` matrix mapping `(X, P)` to normal-mode
    /// quadratures, block diagonal in the `(X, P)` split.
    pub transform: Array2<T>,
    bare: Vec<T>,
}

impl<T: Real> BogoliubovResult<T> {
    /// `max |T J T^t - J|` with `J` the canonical symplectic form.
    pub fn symplectic_residual(&self) -> T {
        let k = self.frequencies.len();
        let t = &self.transform;
        let mut j = Array2::zeros((2 * k, 2 * k));
        for i in 0..k {
            j[[i, k + i]] = T::one();
            j[[k + i, i]] = -T::one();
        }
        // T J T^t
        let mut worst = T::zero();
        for r in 0..2 * k {
            for c in 0..2 * k {
                let mut acc = T::zero();
                for a in 0..2 * k {
                    for b in 0..2 * k {
                        acc += t[[r, a]] * j[[a, b]] * t[[c, b]];
                    }
                }
                worst = worst.max((acc - j[[r, c]]).abs());
            }
        }
        worst
    }

    /// Zero-point energy of the photonic block relative to the bare ladder:
    /// `sum_k (omega_tilde_k - omega_k) / 2`.
    pub fn ground_energy_shift(&self) -> T {
        self.frequencies
            .iter()
            .zip(&self.bare)
            .map(|(&wt, &w)| (wt - w) * T::of(0.5))
            .sum()
    }
}

/// Diagonalize `H_p` exactly through the `2K x 2K` quadrature-space
/// eigenproblem (no Fock cutoff involved).
///
/// With `c_k = (1 - eta_k) A_k`, the normal frequencies are the square roots
/// of the eigenvalues of `diag(omega^2) + 2 (sqrt(omega) c)(sqrt(omega) c)^T`.
pub fn bogoliubov_diagonalize<T: Real>(modes: &[ModeSpec<T>], gauge: &GaugeVector<T>) -> Result<BogoliubovResult<T>> {
    if modes.is_empty() {
        return Err(Error::InvalidConfig("at least one mode is required".into()));
    }
    if gauge.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gauge entries for {} modes",
            gauge.len(),
            modes.len()
        )));
    }
    let k = modes.len();
    let mut m = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let ci = (T::one() - gauge.eta(i)) * modes[i].amplitude;
            let cj = (T::one() - gauge.eta(j)) * modes[j].amplitude;
            m[[i, j]] = T::of(2.0) * (modes[i].omega * modes[j].omega).sqrt() * ci * cj;
        }
        m[[i, i]] += modes[i].omega * modes[i].omega;
    }
    let (ww, o) = sym_eigen(&m)?;
    for &w2 in &ww {
        if !(w2 > T::zero()) {
            return Err(Error::UnstablePhotonForm(w2.to_f64_lossy()));
        }
    }
    let freqs: Vec<T> = ww.iter().map(|w2| w2.sqrt()).collect();

    // X' = L^{1/2} O^T D^{-1/2} X ; P' = L^{-1/2} O^T D^{1/2} P
    let mut transform = Array2::zeros((2 * k, 2 * k));
    for a in 0..k {
        for b in 0..k {
            let ot = o[[b, a]]; // O^T
            transform[[a, b]] = freqs[a].sqrt() * ot / modes[b].omega.sqrt();
            transform[[k + a, k + b]] = modes[b].omega.sqrt() * ot / freqs[a].sqrt();
        }
    }
    Ok(BogoliubovResult { frequencies: freqs, transform, bare: modes.iter().map(|m| m.omega).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    fn gauge(etas: &[f64]) -> GaugeVector<f64> {
        GaugeVector::new(etas.to_vec()).unwrap()
    }

    #[test]
    fn fock_dimensions() {
        assert_eq!(build_fock_space(&[10], 1 << 20).unwrap().dim(), 11);
        assert_eq!(build_fock_space(&[10, 10], 1 << 20).unwrap().dim(), 121);
        assert_eq!(build_fock_space(&[4, 4, 4], 1 << 20).unwrap().dim(), 125);
        assert!(matches!(
            build_fock_space(&[100, 100, 100], 1 << 20),
            Err(Error::CapacityExceeded { .. })
        ));
        assert!(build_fock_space(&[0], 10).is_err());
    }

    #[test]
    fn index_maps_row_major_mode0_slowest() {
        let space = build_fock_space(&[2, 3], 1 << 20).unwrap();
        assert_eq!(space.flat_index(&[0, 0]), 0);
        assert_eq!(space.flat_index(&[0, 3]), 3);
        assert_eq!(space.flat_index(&[1, 0]), 4);
        assert_eq!(space.flat_index(&[2, 3]), 11);
        for f in 0..space.dim() {
            assert_eq!(space.flat_index(&space.occupation(f)), f);
        }
    }

    #[test]
    fn annihilation_entries_are_sqrt_n() {
        let space = build_fock_space(&[2], 64).unwrap();
        let b = mode_operator::<f64>(&space, 0, OperatorKind::Annihilate).to_csr();
        let d = b.to_dense();
        assert_abs_diff_eq!(d[[0, 1]].re, 1.0_f64.sqrt());
        assert_abs_diff_eq!(d[[1, 2]].re, 2.0_f64.sqrt());
        assert_eq!(d.iter().filter(|v| **v != Complex64::new(0.0, 0.0)).count(), 2);
    }

    #[test]
    fn number_operator_diagonal() {
        let space = build_fock_space(&[3], 64).unwrap();
        let n = mode_operator::<f64>(&space, 0, OperatorKind::Number).to_csr().to_dense();
        for i in 0..4 {
            assert_abs_diff_eq!(n[[i, i]].re, i as f64);
        }
    }

    #[test]
    fn commutator_is_identity_below_cutoff() {
        let space = build_fock_space(&[5], 64).unwrap();
        let b = mode_operator::<f64>(&space, 0, OperatorKind::Annihilate).to_csr().to_dense();
        let bd = mode_operator::<f64>(&space, 0, OperatorKind::Create).to_csr().to_dense();
        let comm = b.dot(&bd) - bd.dot(&b);
        for i in 0..5 {
            assert_abs_diff_eq!(comm[[i, i]].re, 1.0, epsilon = 1e-14);
        }
        // truncation edge: top level sees -n_max instead of +1
        assert_abs_diff_eq!(comm[[5, 5]].re, -5.0, epsilon = 1e-14);
    }

    #[test]
    fn operators_commute_across_modes() {
        let space = build_fock_space(&[2, 2], 64).unwrap();
        let x0 = mode_operator::<f64>(&space, 0, OperatorKind::PositionQuadrature).to_csr().to_dense();
        let p1 = mode_operator::<f64>(&space, 1, OperatorKind::MomentumQuadrature).to_csr().to_dense();
        let comm = x0.dot(&p1) - p1.dot(&x0);
        assert!(comm.iter().all(|v| v.norm() < 1e-14));
    }

    /// The phase rotation `|n> -> i^n |n>` must turn the standard complex
    /// quadratures into the real matrices the assembly uses.
    #[test]
    fn rotation_intertwines_conventions() {
        let space = build_fock_space(&[4, 3], 1024).unwrap();
        let dim = space.dim();
        let phase: Vec<Complex64> = (0..dim)
            .map(|f| {
                let total: usize = space.occupation(f).iter().sum();
                Complex64::i().powu(total as u32)
            })
            .collect();
        for k in 0..2 {
            let x = mode_operator::<f64>(&space, k, OperatorKind::PositionQuadrature).to_csr().to_dense();
            let p = mode_operator::<f64>(&space, k, OperatorKind::MomentumQuadrature).to_csr().to_dense();
            let r = ladder_antisym::<f64>(&space, k).to_csr().to_dense();
            let q = quadrature_sym::<f64>(&space, k).to_csr().to_dense();
            for i in 0..dim {
                for j in 0..dim {
                    let rot_x = phase[i].conj() * x[[i, j]] * phase[j];
                    let rot_p = phase[i].conj() * p[[i, j]] * phase[j];
                    // D^dag (b+b^dag) D = -i (bdag - b)
                    assert_abs_diff_eq!(rot_x.re, 0.0, epsilon = 1e-14);
                    assert_abs_diff_eq!(rot_x.im, -r[[i, j]], epsilon = 1e-14);
                    // D^dag i(b^dag-b) D = b + b^dag
                    assert_abs_diff_eq!(rot_p.re, q[[i, j]], epsilon = 1e-14);
                    assert_abs_diff_eq!(rot_p.im, 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn bogoliubov_dipole_endpoint_is_trivial() {
        let modes = [ModeSpec::new(1.0, 0.7).unwrap(), ModeSpec::new(2.5, 0.7).unwrap()];
        let res = bogoliubov_diagonalize(&modes, &gauge(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(res.frequencies[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(res.frequencies[1], 2.5, epsilon = 1e-14);
        assert!(res.symplectic_residual() < 1e-10);
    }

    #[test]
    fn bogoliubov_zero_amplitude_is_identity() {
        let modes = [ModeSpec::new(1.0, 0.0).unwrap(), ModeSpec::new(3.0, 0.0).unwrap()];
        let res = bogoliubov_diagonalize(&modes, &gauge(&[0.3, 0.4])).unwrap();
        assert_relative_eq!(res.frequencies[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(res.frequencies[1], 3.0, epsilon = 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(res.transform[[i, j]], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bogoliubov_single_mode_coulomb_formula() {
        // eta = 0: omega_tilde = sqrt(omega^2 + 2 omega A^2)
        let omega = 0.9;
        let a = 0.45;
        let modes = [ModeSpec::new(omega, a).unwrap()];
        let res = bogoliubov_diagonalize(&modes, &gauge(&[0.0])).unwrap();
        let expected = (omega * omega + 2.0 * omega * a * a).sqrt();
        assert_relative_eq!(res.frequencies[0], expected, epsilon = 1e-12);
        assert!(res.symplectic_residual() < 1e-10);
    }

    #[test]
    fn symplectic_residual_small_for_generic_gauge() {
        let modes = [
            ModeSpec::new(1.0, 0.3).unwrap(),
            ModeSpec::new(5.0, 0.3).unwrap(),
            ModeSpec::new(0.4, 0.3).unwrap(),
        ];
        let res = bogoliubov_diagonalize(&modes, &gauge(&[0.2, 0.8, 0.5])).unwrap();
        assert!(res.symplectic_residual() < 1e-10, "residual {}", res.symplectic_residual());
        assert!(res.frequencies.iter().all(|w| *w > 0.0));
    }
}
