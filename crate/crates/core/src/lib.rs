//! Driven, dissipative two-level system under the Lindblad equation:
//! super-operator construction, closed-form and numerical spectra,
//! exceptional points, phase-plane classification and time evolution.

// `!(x <= tol)` is used on purpose so that NaN fails a check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exceptional;
pub mod model;
pub mod spectrum;
pub mod superop;
pub mod verify;

pub use error::{Error, Result};
