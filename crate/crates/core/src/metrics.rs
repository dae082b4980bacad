//! Gauge-quality metrics: spectral deviation sigma, ground-state fidelity,
//! and the entanglement entropy of full and truncated ground states.

use ndarray::Array2;

use crate::atom::AtomBasis;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, sym_eigenvalues};
use crate::Real;

/// Singular values below this floor are excluded from the entropy sum.
const SCHMIDT_FLOOR: f64 = 1e-12;

/// Metrics of one gauge point. `sigma` is stored in units of the bare
/// transition energy `Delta`; entropies use the natural logarithm.
#[derive(Debug, Clone)]
pub struct MetricsReport<T> {
    pub etas: Vec<T>,
    pub sigma: T,
    pub fidelity: T,
    pub s_full: T,
    pub s_trunc: T,
    pub m_energies: usize,
}

/// Excitation energies `E_i - E_0`, `i = 1..`.
pub fn excitation_energies<T: Real>(spectrum: &[T]) -> Vec<T> {
    spectrum.iter().skip(1).map(|&e| e - spectrum[0]).collect()
}

/// Root-mean-square deviation of two sets of excitation energies:
/// `sigma = sqrt( sum_i (E_i - E_i')^2 / M )`.
pub fn spectral_deviation<T: Real>(exact: &[T], truncated: &[T]) -> Result<T> {
    if exact.len() != truncated.len() || exact.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "spectral deviation over {} vs {} excitation energies",
            exact.len(),
            truncated.len()
        )));
    }
    let m = T::of(exact.len() as f64);
    let sum: T = exact
        .iter()
        .zip(truncated)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok((sum / m).sqrt())
}

/// Lift a truncated-model state from (M-level) x (Fock) to (grid) x (Fock):
/// the coefficient `c_{i,n}` lands on `psi_i(x_j) sqrt(dx)` in the grid slot.
/// Norm is preserved to 1e-10 because the basis vectors are orthonormal.
pub fn embed_truncated_state<T: Real>(
    state: &[T],
    basis: &AtomBasis<T>,
    m_levels: usize,
    fock_dim: usize,
) -> Result<Vec<T>> {
    if basis.n_levels() < m_levels {
        return Err(Error::DimensionMismatch(format!(
            "basis holds {} levels, embedding needs {m_levels}",
            basis.n_levels()
        )));
    }
    if state.len() != m_levels * fock_dim {
        return Err(Error::CutoffMismatch(format!(
            "state length {} is not (levels {m_levels}) x (fock {fock_dim})",
            state.len()
        )));
    }
    let n = basis.grid().n_points;
    let mut out = vec![T::zero(); n * fock_dim];
    for i in 0..m_levels {
        let u = basis.grid_vector(i);
        let row = &state[i * fock_dim..(i + 1) * fock_dim];
        for (j, &uj) in u.iter().enumerate() {
            if uj != T::zero() {
                let dst = &mut out[j * fock_dim..(j + 1) * fock_dim];
                for (d, &c) in dst.iter_mut().zip(row) {
                    *d += uj * c;
                }
            }
        }
    }
    let norm_in = norm2(state);
    let norm_out = norm2(&out);
    if (norm_out - norm_in).abs() > T::of(1e-10) * norm_in.max(T::one()) {
        return Err(Error::NormDeviation((norm_out - norm_in).abs().to_f64_lossy()));
    }
    Ok(out)
}

/// `F = |<psi|Psi>|^2`, free of global phases. Both states must be normalized
/// to 1e-6 and live in the same Hilbert space.
pub fn ground_state_fidelity<T: Real>(psi: &[T], big_psi: &[T]) -> Result<T> {
    if psi.len() != big_psi.len() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity over states of length {} and {}",
            psi.len(),
            big_psi.len()
        )));
    }
    for v in [psi, big_psi] {
        let dev = (norm2(v) - T::one()).abs();
        if dev > T::of(1e-6) {
            return Err(Error::NormDeviation(dev.to_f64_lossy()));
        }
    }
    let overlap = dot(psi, big_psi);
    Ok(overlap * overlap)
}

/// Von Neumann entropy of either reduced density matrix of a pure state on
/// (atom) x (fock), atom slot first: reshape, Gram matrix on the smaller
/// side, `S = -sum s_i^2 ln s_i^2` with the `SCHMIDT_FLOOR` cutoff.
pub fn entanglement_entropy<T: Real>(state: &[T], atom_dim: usize, fock_dim: usize) -> Result<T> {
    if atom_dim * fock_dim != state.len() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} does not factor as {atom_dim} x {fock_dim}",
            state.len()
        )));
    }
    let dev = (norm2(state) - T::one()).abs();
    if dev > T::of(1e-6) {
        return Err(Error::NormDeviation(dev.to_f64_lossy()));
    }
    let lam = schmidt_squares(state, atom_dim, fock_dim, atom_dim <= fock_dim)?;
    Ok(entropy_from_schmidt(&lam))
}

/// Squared Schmidt coefficients through the Gram matrix of the chosen side.
pub(crate) fn schmidt_squares<T: Real>(
    state: &[T],
    atom_dim: usize,
    fock_dim: usize,
    atom_side: bool,
) -> Result<Vec<T>> {
    let side = if atom_side { atom_dim } else { fock_dim };
    let mut gram = Array2::zeros((side, side));
    if atom_side {
        for a in 0..atom_dim {
            let ra = &state[a * fock_dim..(a + 1) * fock_dim];
            for b in 0..=a {
                let rb = &state[b * fock_dim..(b + 1) * fock_dim];
                gram[[a, b]] = dot(ra, rb);
            }
        }
    } else {
        for a in 0..atom_dim {
            let ra = &state[a * fock_dim..(a + 1) * fock_dim];
            for f in 0..fock_dim {
                for g in 0..=f {
                    gram[[f, g]] += ra[f] * ra[g];
                }
            }
        }
    }
    sym_eigenvalues(&gram)
}

pub(crate) fn entropy_from_schmidt<T: Real>(lambda: &[T]) -> T {
    let floor = T::of(SCHMIDT_FLOOR * SCHMIDT_FLOOR);
    let mut s = T::zero();
    for &l in lambda {
        if l > floor {
            s -= l * l.ln();
        }
    }
    s
}
