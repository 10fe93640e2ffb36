//! Observational entropy of quantum and classical states.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: states, observables, projective and Kraus coarse-grainings,
//!   tensor-product structure, JSON formats.
//! - [`entropy`]: observational entropy of ordered measurement sequences and
//!   the identities it satisfies.
//! - [`classical`]: the classical analogue on weighted sample spaces and
//!   phase-space grids.
//! - [`local`]: product coarse-grainings, total correlation and the quantum
//!   correlation entropy.
//! - [`thermo`]: hard-core boson lattices, ensembles, time evolution and the
//!   thermodynamic entropies built from particle-number and energy
//!   coarse-grainings.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod entropy;
mod error;
pub mod hilbert;
pub mod local;
pub mod random;
pub mod thermo;

pub use error::{Error, Result};
