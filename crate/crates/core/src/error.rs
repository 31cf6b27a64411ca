use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("photon number {n} does not fit below cutoff {cutoff}")]
    Truncation { n: usize, cutoff: usize },

    #[error("cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("mode index {mode} invalid for a {num_modes}-mode state")]
    InvalidMode { mode: usize, num_modes: usize },

    #[error("generator is not Hermitian (max |G - G^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state has zero norm after projection")]
    ZeroNorm,

    #[error("grid integration of |psi|^2 gave {integral}, expected 1 ({diagnostic})")]
    GridNormalization { integral: f64, diagnostic: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise width {width} is not below half the level spacing {half_spacing}; rounding is ambiguous")]
    AmbiguousRounding { width: f64, half_spacing: f64 },

    #[error("quadrature did not converge (last change {change:e} after {refinements} refinements)")]
    QuadratureNonConvergence { change: f64, refinements: usize },

    #[error("truncation leakage {leakage:e} exceeds budget {budget:e}")]
    LeakageOverflow { leakage: f64, budget: f64 },

    #[error("photon counter returned n = 0; cubic coefficient undefined")]
    ZeroPhotonOutcome,

    #[error("ancilla sector of dimension {dimension} exceeds budget {budget}")]
    AncillaBudget { dimension: usize, budget: usize },

    #[error("measured mode is entangled with the rest; conditional state would be mixed")]
    MixedConditionalState,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
