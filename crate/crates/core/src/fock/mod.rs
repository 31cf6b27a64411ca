//! Truncated Fock-space states and operators.
//!
//! Units: hbar = 1, so `q = (a + a^H)/sqrt(2)` and the vacuum has
//! `Var(q) = 1/2`.

mod operator;
mod state;
mod wavefunction;

pub use operator::{
    annihilation_matrix, apply, expectation, fidelity, hermitian_exponential,
    hermitian_product_exponential, quadrature_operators, ModeOperator, HERMITIAN_TOLERANCE,
};
pub use state::{MultiModeState, NORM_TOLERANCE};
pub use wavefunction::{
    evaluate_amplitudes, hermite_functions, hermite_table, wavefunction, QuadratureGrid,
    GRID_NORM_TOLERANCE,
};
