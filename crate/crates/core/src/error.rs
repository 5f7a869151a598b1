use thiserror::Error;

/// Errors raised by the link model, file loaders and the calibration routine.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter, scenario or invocation is missing a field or violates a
    /// type invariant.
    #[error("configuration error: {0}")]
    Config(String),

    /// The capacitive network is physically meaningless (for instance a
    /// non-positive receiver differential capacitance).
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// The nodal system could not be solved.
    #[error("singular nodal system at node `{node}`")]
    Singular { node: String },

    /// A measurement file could not be parsed.
    #[error("{path}: line {line}, column {column}: {message}")]
    Csv {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    /// Fewer independent observations than free parameters.
    #[error("under-determined fit: {0}")]
    UnderDetermined(String),

    /// The optimizer hit its iteration cap. Carries the best objective value
    /// and the parameter values that produced it.
    #[error("fit did not converge after {iterations} iterations (best objective {objective:.6e})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        best: Vec<(String, f64)>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input) get their own exit status
    /// in the command-line front end.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::NonConvergence { .. })
    }

    /// Short stable identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::InvalidNetwork(_) => "invalid-network",
            Error::Singular { .. } => "singular",
            Error::Csv { .. } => "csv",
            Error::UnderDetermined(_) => "under-determined",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
