use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid configuration at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{}: non-Hermitian {what} (defect {defect:.3e})", path.display())]
    NonHermitian { path: PathBuf, what: String, defect: f64 },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{module}: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: floquet_flow::Error,
    },
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), message: message.into() }
    }

    /// 1 for configuration and input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }
}

/// Module of the pipeline an error originates from.
fn provenance(e: &floquet_flow::Error) -> &'static str {
    use floquet_flow::Error::*;
    match e {
        AccuracyFailure { .. } | TruncationFailure { .. } | ShiftOverflow { .. } | NonHermitianInput { .. } => {
            "floquet_core"
        }
        ZeroFrequency => "bath_spectral",
        ResonantDivergence { .. } | WindowTooSmall { .. } | IndexOutOfRange { .. } => "transition_rates",
        NonErgodic { .. } | SteadyStateFailure(_) | InconsistentPseudoForms { .. } => "steady_kinetics",
        InvalidInput(_) => "input",
    }
}

impl From<floquet_flow::Error> for CliError {
    fn from(source: floquet_flow::Error) -> Self {
        CliError::Numerical { module: provenance(&source), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
