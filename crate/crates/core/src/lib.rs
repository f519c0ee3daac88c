//! Finite-volume laboratory for lattice fermions with mean-field interactions.
//!
//! The crate builds the CAR algebra of a periodic window as dense matrices,
//! short-range and long-range (mean-field) Hamiltonians on it, their Gibbs
//! states, KMS and modular checks, the Bogoliubov thermodynamic game with its
//! gap equations, and the self-consistent mean-field dynamics.

pub mod car;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod interaction;
pub mod linalg;
pub mod longrange;
pub mod models;
pub mod rng;
pub mod thermo;

/// Version of this crate, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use car::{FockContext, LocalOperator, Parity, Site};
pub use error::{Error, Result};
pub use game::{GapSolution, GapVector, SolverOptions, ThermoGame};
pub use interaction::{AnchorTerm, DecayFunction, Interaction, TermSpec};
pub use linalg::{c64, Matrix, Spectrum};
pub use longrange::{LongRangeModel, LongRangeTerm};
pub use thermo::ThermalState;
