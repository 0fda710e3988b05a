use thiserror::Error;

/// Failures raised by the Floquet pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-Hermitian input ({what}): defect {defect:.3e}")]
    NonHermitianInput { what: String, defect: f64 },

    #[error("propagator unitarity defect {defect:.3e} exceeds bound after {steps} steps")]
    AccuracyFailure { defect: f64, steps: usize },

    #[error("Fourier truncation tail {tail:.3e} above tolerance at maximal cutoff K = {harmonics}")]
    TruncationFailure { tail: f64, harmonics: usize },

    #[error("representative shift by {shift} overflows the harmonic window of state {state}")]
    ShiftOverflow { state: usize, shift: i64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("thermal weight requested at zero frequency")]
    ZeroFrequency,

    #[error("rate kernel diverges at frequency {frequency:.3e} (constant spectral density)")]
    ResonantDivergence { frequency: f64 },

    #[error("requested harmonic window {requested} exceeds available window {available}")]
    WindowTooSmall { requested: usize, available: usize },

    #[error("rate graph has {} closed classes; no unique steady state", components.len())]
    NonErgodic {
        /// Closed communicating classes with their local stationary distributions.
        components: Vec<ClosedClass>,
    },

    #[error("steady-state solve failed: {0}")]
    SteadyStateFailure(String),

    #[error("pseudo-transition dissipation forms disagree: net {net:.12e} vs closed {closed:.12e}")]
    InconsistentPseudoForms { net: f64, closed: f64 },
}

/// A closed communicating class of the rate graph together with the
/// stationary distribution of the rates restricted to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedClass {
    pub states: Vec<usize>,
    pub distribution: Vec<f64>,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
