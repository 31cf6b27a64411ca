//! Truncated Fock-space simulation of continuous-variable optical quantum
//! computation: Clifford (linear-optics) gates, photon-counting and
//! homodyne measurement models, and the cubic phase gate driven by an
//! offline-prepared ancilla.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod cubic;
pub mod detectors;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod fock;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
