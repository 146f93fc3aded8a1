//! Counterpropagating parametric downconversion in periodically poled
//! rectangular waveguides.
//!
//! The crate is organised bottom-up:
//!
//! - [`dispersion`]: Sellmeier models for LiNbO3 (e) and KTP (z).
//! - [`waveguide`]: effective-index correction for a buried channel guide.
//! - [`jsa`]: process description, momentum mismatch and the joint spectral
//!   amplitude on a discrete frequency grid.
//! - [`schmidt`]: Schmidt decomposition, purity and Schmidt number.
//! - [`design`]: grating solver, separability diagnostic, pump-width
//!   optimisation and the degenerate / tuning sweeps.
//! - [`export`]: CSV and JSON writers for all of the above.
//!
//! Frequencies are angular (rad/s) and wavevectors are in rad/µm throughout;
//! wavelengths only appear at the edges of the API.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dispersion;
pub mod error;
pub mod export;
pub mod jsa;
pub mod numeric;
pub mod schmidt;
pub mod units;
pub mod waveguide;

pub use error::{Error, Result};
