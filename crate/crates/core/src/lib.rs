//! Numerical toolkit for a Rydberg-EIT single-photon switch: three-level
//! ladder dynamics, EIT susceptibility and transmission, pulse propagation,
//! blockade geometry, polarization tomography and curve fitting.
//!
//! Frequencies are [`AngularFreq`] values in units of 2π×MHz throughout.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockade;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod lindblad;
pub mod optical_response;
pub mod propagation;
pub mod quantum_state;
pub mod types;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix};
pub use types::{presets, AngularFreq, LadderField, LadderParams};
