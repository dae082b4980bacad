//! Quantifies how faithfully gauge-parametrized truncated models (generalized
//! multimode quantum Rabi models) reproduce the low-energy physics of an
//! anharmonic atom coupled to a multimode cavity, and scans the per-mode
//! gauge-parameter space for the gauge that performs best under several
//! metrics (spectral deviation, ground-state fidelity, light-matter
//! entanglement entropy).
//!
//! Everything is expressed in units with `hbar = m = q = 1`; energies are
//! reported in units of the bare atomic transition `Delta = eps_1 - eps_0`
//! wherever a dimensionless number is expected.
//!
//! The crate is generic over the floating-point scalar through [`Real`];
//! `f64` aliases for the main types live at the crate root. All operations
//! are pure and deterministic: repeated runs produce bitwise-identical
//! results regardless of thread count.

pub mod atom;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod photon;
pub mod sparse;
pub mod spectra;
pub mod sweep;

use std::fmt;
use std::iter::Sum;

pub use error::{Error, Result};

/// Floating-point scalar the numerical core is generic over: `f32` or `f64`.
///
/// Everything downstream only needs `Float` arithmetic plus conversion from
/// `f64` literals, so custom scalar types satisfying these bounds work too.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be representable")
    }

    /// Round-trip to `f64` (exact for `f64`, widening for `f32`).
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `f64` instantiations used by the CLI and most tests.
pub type Grid64 = atom::Grid<f64>;
pub type PotentialSpec64 = atom::PotentialSpec<f64>;
pub type AtomBasis64 = atom::AtomBasis<f64>;
pub type MatrixElements64 = atom::MatrixElements<f64>;
pub type ModeSpec64 = photon::ModeSpec<f64>;
pub type BogoliubovResult64 = photon::BogoliubovResult<f64>;
pub type GaugeVector64 = hamiltonian::GaugeVector<f64>;
pub type FullHamiltonian64 = hamiltonian::FullHamiltonian<f64>;
pub type TruncatedModel64 = hamiltonian::TruncatedModel<f64>;
pub type EigenRequest64 = spectra::EigenRequest<f64>;
pub type ConvergenceReport64 = spectra::ConvergenceReport<f64>;
pub type MetricsReport64 = metrics::MetricsReport<f64>;
pub type SweepPlan64 = sweep::SweepPlan<f64>;
pub type SweepResult64 = sweep::SweepResult<f64>;
