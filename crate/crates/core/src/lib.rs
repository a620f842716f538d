//! Spectral simulation of critical dissipative quasi-geostrophic dynamics on
//! the unit sphere, with diagnostics for the regularity machinery.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod cli;
pub mod degiorgi;
pub mod error;
pub mod extension;
pub mod harmonics;
pub mod operators;
pub mod solver;
pub mod sphere;

pub use error::{Error, Result};
