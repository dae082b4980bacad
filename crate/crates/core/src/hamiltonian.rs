//! Assembly of the exact mixed-gauge Hamiltonian on (grid) x (Fock) and of
//! the two families of truncated models (bare-basis and renormalized-basis
//! projections) with all projected coefficients.
//!
//! All matrices are real symmetric in the phase-rotated Fock basis described
//! in [`crate::photon`]; the atomic slot is ordered first in the Kronecker
//! layout so partial traces are contiguous reshapes.

use std::io::Write;

use ndarray::Array2;

use crate::atom::{
    build_effective_potential, derivative_matrix, matrix_elements, renormalization_weight,
    solve_atom_weighted, AtomBasis, DiffOrder, Grid, MatrixElements, PotentialSpec,
};
use crate::error::{Error, Result};
use crate::photon::{ladder_antisym, photon_block, quadrature_sym, FockSpace, ModeSpec};
use crate::sparse::{Coo, Csr};
use crate::Real;

/// Hermiticity budget for assembled operators, relative to `max |H|`.
const HERMITICITY_LIMIT: f64 = 1e-12;

/// Per-mode gauge parameters; 0 is the Coulomb endpoint, 1 the dipole
/// endpoint, values outside `[0, 1]` are permitted for exploratory sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeVector<T> {
    etas: Vec<T>,
}

impl<T: Real> GaugeVector<T> {
    pub fn new(etas: Vec<T>) -> Result<Self> {
        if etas.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidConfig("gauge parameters must be finite".into()));
        }
        Ok(GaugeVector { etas })
    }

    pub fn uniform(eta: T, n_modes: usize) -> Self {
        GaugeVector { etas: vec![eta; n_modes] }
    }

    pub fn coulomb(n_modes: usize) -> Self {
        Self::uniform(T::zero(), n_modes)
    }

    pub fn dipole(n_modes: usize) -> Self {
        Self::uniform(T::one(), n_modes)
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn eta(&self, k: usize) -> T {
        self.etas[k]
    }

    pub fn etas(&self) -> &[T] {
        &self.etas
    }

    /// True when any component leaves `[0, 1]`; such points are legal but
    /// flagged by the CLI output.
    pub fn outside_unit_interval(&self) -> bool {
        self.etas.iter().any(|&e| e < T::zero() || e > T::one())
    }
}

/// Exact Hamiltonian on (position grid) x (multimode Fock), with the pieces
/// it was assembled from.
#[derive(Debug, Clone)]
pub struct FullHamiltonian<T> {
    pub matrix: Csr<T>,
    pub grid: Grid<T>,
    pub fock: FockSpace,
    pub gauge: GaugeVector<T>,
    pub modes: Vec<ModeSpec<T>>,
    pub potential: PotentialSpec<T>,
}

impl<T: Real> FullHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }
}

/// Assemble the mixed-gauge Hamiltonian
///
/// `H = [-D2/2 + V_eff] (x) 1  +  sum_k (1-eta_k) A_k (p/m) (x) (b_k + b_k^dag)`
/// `    - sum_k eta_k omega_k A_k x (x) i(b_k^dag - b_k)  +  1 (x) H_p`
///
/// in the phase-rotated real form. The x^2 renormalization term is part of
/// `V_eff`; the A^2 term lives in `H_p` with all mode-mode couplings.
pub fn assemble_full<T: Real>(
    grid: &Grid<T>,
    potential: &PotentialSpec<T>,
    modes: &[ModeSpec<T>],
    gauge: &GaugeVector<T>,
    fock: &FockSpace,
    order: DiffOrder,
) -> Result<FullHamiltonian<T>> {
    if modes.len() != fock.n_modes() || gauge.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "assemble_full: {} modes, {} fock modes, {} gauge entries",
            modes.len(),
            fock.n_modes(),
            gauge.len()
        )));
    }
    let veff = build_effective_potential(potential, modes, gauge, grid)?;
    let nf = fock.dim();
    let atom_part = {
        let mut a = crate::atom::kinetic_matrix(grid, order);
        a.add_assign(&Coo::from_diagonal(&veff));
        a
    };
    let mut h = atom_part.kron(&Coo::identity(nf));

    let s = derivative_matrix(grid, order);
    let x_diag = Coo::from_diagonal(&grid.points());
    for (k, (mode, &eta)) in modes.iter().zip(gauge.etas()).enumerate() {
        // (1-eta) A p (x) (b+b^dag) -> -(1-eta) A S (x) R
        let cc = (T::one() - eta) * mode.amplitude;
        if cc != T::zero() {
            h.add_assign(&s.kron(&ladder_antisym(fock, k)).scaled(-cc));
        }
        // -eta omega A x (x) i(b^dag - b) -> -eta omega A X (x) Q
        let cd = eta * mode.omega * mode.amplitude;
        if cd != T::zero() {
            h.add_assign(&x_diag.kron(&quadrature_sym(fock, k)).scaled(-cd));
        }
    }
    h.add_assign(&Coo::identity(grid.n_points).kron(&photon_block(fock, modes, gauge)?));

    let matrix = h.to_csr();
    matrix.require_symmetric(T::of(HERMITICITY_LIMIT))?;
    Ok(FullHamiltonian {
        matrix,
        grid: grid.clone(),
        fock: fock.clone(),
        gauge: gauge.clone(),
        modes: modes.to_vec(),
        potential: potential.clone(),
    })
}

/// Which atomic eigenbasis the projector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Eigenstates of the bare atom (gauge-independent projector).
    Bare,
    /// Eigenstates of the atom with the gauge-dependent x^2 renormalization.
    Renormalized,
}

/// M-level projected model: transition energy, per-mode coupling energies,
/// the bare-basis x^2 corrections, and the full matrix-element tables the
/// assembly actually uses (the two-level Pauli form is the M = 2 special
/// case of the tables).
#[derive(Debug, Clone)]
pub struct TruncatedModel<T> {
    pub basis_kind: BasisKind,
    pub m_levels: usize,
    /// `Delta` (bare) or `Delta^(eta)` (renormalized).
    pub delta: T,
    /// `delta_k` corrections from projecting the x^2 term; bare basis only.
    pub delta_corrections: Option<Vec<T>>,
    /// `g_C^k = i q A_k <e0|p|e1> / m`, real under the phase conventions here.
    pub g_c: Vec<T>,
    /// `g_D^k = omega_k q A_k <e0|x|e1>`.
    pub g_d: Vec<T>,
    pub energies: Vec<T>,
    pub elements: MatrixElements<T>,
    pub gauge: GaugeVector<T>,
    pub modes: Vec<ModeSpec<T>>,
    pub basis: AtomBasis<T>,
    pub warnings: Vec<String>,
}

/// Build a truncated model from an already-solved atomic basis (the bare
/// basis is gauge-independent, so sweeps solve it once and project many
/// times).
pub fn truncated_model_from_basis<T: Real>(
    basis_kind: BasisKind,
    basis: AtomBasis<T>,
    elements: MatrixElements<T>,
    modes: &[ModeSpec<T>],
    gauge: &GaugeVector<T>,
) -> Result<TruncatedModel<T>> {
    let m = elements.m;
    if m < 2 {
        return Err(Error::InvalidConfig("truncation needs at least two levels".into()));
    }
    if gauge.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gauge entries for {} modes",
            gauge.len(),
            modes.len()
        )));
    }
    let delta = basis.delta();
    let mut warnings = Vec::new();
    if delta.abs() < T::of(1e-9) * basis.energy(0).abs().max(T::one()) {
        warnings.push(format!(
            "near-degenerate lowest levels: eps1 - eps0 = {delta}; coefficients remain well defined"
        ));
    }
    let g_c: Vec<T> = modes
        .iter()
        .map(|mode| -mode.amplitude * elements.p_im[[0, 1]])
        .collect();
    let g_d: Vec<T> = modes
        .iter()
        .map(|mode| mode.omega * mode.amplitude * elements.x[[0, 1]])
        .collect();
    let delta_corrections = match basis_kind {
        BasisKind::Bare => Some(
            modes
                .iter()
                .map(|mode| {
                    mode.omega
                        * mode.amplitude
                        * mode.amplitude
                        * (elements.xsq[[1, 1]] - elements.xsq[[0, 0]])
                        * T::of(0.5)
                })
                .collect(),
        ),
        BasisKind::Renormalized => None,
    };
    let energies = basis.energies()[..m].to_vec();
    Ok(TruncatedModel {
        basis_kind,
        m_levels: m,
        delta,
        delta_corrections,
        g_c,
        g_d,
        energies,
        elements,
        gauge: gauge.clone(),
        modes: modes.to_vec(),
        basis,
        warnings,
    })
}

/// Build a truncated model from scratch: solve the atom in the requested
/// basis (bare potential, or the eta-renormalized effective potential) and
/// project.
pub fn build_truncated_model<T: Real>(
    basis_kind: BasisKind,
    m: usize,
    modes: &[ModeSpec<T>],
    gauge: &GaugeVector<T>,
    grid: &Grid<T>,
    potential: &PotentialSpec<T>,
    order: DiffOrder,
) -> Result<TruncatedModel<T>> {
    let (weight, v) = match basis_kind {
        BasisKind::Bare => (T::zero(), potential.on_grid(grid)),
        BasisKind::Renormalized => (
            renormalization_weight(modes, gauge),
            build_effective_potential(potential, modes, gauge, grid)?,
        ),
    };
    let basis = solve_atom_weighted(&v, grid, m, order, weight)?;
    let elements = matrix_elements(&basis, m, order)?;
    truncated_model_from_basis(basis_kind, basis, elements, modes, gauge)
}

/// Matrix representation of the truncated model on (M-level) x (Fock),
/// atomic slot first, photonic part untruncated (full `H_p` with the A^2
/// term and its mode-mode couplings).
pub fn assemble_truncated<T: Real>(model: &TruncatedModel<T>, fock: &FockSpace) -> Result<Csr<T>> {
    if fock.n_modes() != model.modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} modes, fock space {}",
            model.modes.len(),
            fock.n_modes()
        )));
    }
    let m = model.m_levels;
    let nf = fock.dim();
    // atomic table: diag(eps) plus, in the bare basis, the projected x^2 term
    let mut atom_table = Array2::zeros((m, m));
    for i in 0..m {
        atom_table[[i, i]] = model.energies[i];
    }
    if model.basis_kind == BasisKind::Bare {
        let weight = renormalization_weight(&model.modes, &model.gauge);
        for i in 0..m {
            for j in 0..m {
                atom_table[[i, j]] += weight * model.elements.xsq[[i, j]];
            }
        }
    }
    let mut atom_coo = Coo::new(m, m);
    for i in 0..m {
        for j in 0..m {
            atom_coo.push(i, j, atom_table[[i, j]]);
        }
    }
    let mut h = atom_coo.kron(&Coo::identity(nf));

    // couplings through the projected tables, rotated real form
    let mut pim_coo = Coo::new(m, m);
    let mut x_coo = Coo::new(m, m);
    for i in 0..m {
        for j in 0..m {
            pim_coo.push(i, j, model.elements.p_im[[i, j]]);
            x_coo.push(i, j, model.elements.x[[i, j]]);
        }
    }
    for (k, (mode, &eta)) in model.modes.iter().zip(model.gauge.etas()).enumerate() {
        let cc = (T::one() - eta) * mode.amplitude;
        if cc != T::zero() {
            // (1-eta) A (i pim) (x) (b+b^dag) -> +(1-eta) A pim (x) R
            h.add_assign(&pim_coo.kron(&ladder_antisym(fock, k)).scaled(cc));
        }
        let cd = eta * mode.omega * mode.amplitude;
        if cd != T::zero() {
            h.add_assign(&x_coo.kron(&quadrature_sym(fock, k)).scaled(-cd));
        }
    }
    h.add_assign(&Coo::identity(m).kron(&photon_block(fock, &model.modes, &model.gauge)?));

    let csr = h.to_csr();
    csr.require_symmetric(T::of(HERMITICITY_LIMIT))?;
    Ok(csr)
}

/// Dump an assembled operator as `row, col, re, im` text for external
/// verification. Entries are written in row-major order; the imaginary
/// column is zero because assembly works in the phase-rotated Fock basis
/// (noted in the header).
pub fn dump_matrix<T: Real, W: Write>(matrix: &Csr<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# coordinate-list dump: row, col, re, im")?;
    writeln!(
        out,
        "# basis: position grid (x) Fock with per-mode phase rotation |n> -> i^n |n>; \
         all entries real in this convention"
    )?;
    writeln!(out, "# dimension {} x {}, nnz {}", matrix.nrows, matrix.ncols, matrix.nnz())?;
    for (i, j, v) in matrix.iter_entries() {
        writeln!(out, "{i}, {j}, {v:.17e}, 0.0")?;
    }
    Ok(())
}

/// Spectrum of the decoupled direct sum `eps_i + sum_k omega_k n_k`, for
/// tests and the A = 0 cross-checks.
pub fn decoupled_spectrum<T: Real>(
    energies: &[T],
    modes: &[ModeSpec<T>],
    fock: &FockSpace,
    k: usize,
) -> Vec<T> {
    let photon = crate::photon::photon_energy_diag(fock, modes);
    let mut all: Vec<T> = energies
        .iter()
        .flat_map(|&e| photon.iter().map(move |&p| e + p))
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    all.truncate(k);
    all
}
