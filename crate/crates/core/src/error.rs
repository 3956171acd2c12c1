use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented invariant (geometry, config, shapes).
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("newton iteration did not converge after {iterations} iterations (max residual {residual:.3e} A)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at pivot {pivot}")]
    SingularJacobian { pivot: usize },

    #[error("column {index}: {source}")]
    Column {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value {value} is not representable in {bits} {kind} bits")]
    Overflow {
        value: i64,
        bits: u32,
        kind: &'static str,
    },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("pairing: {0}")]
    Pairing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Invalid(_)
            | Error::Domain(_)
            | Error::DimensionMismatch(_)
            | Error::Overflow { .. }
            | Error::Parse { .. }
            | Error::Config(_)
            | Error::Pairing(_)
            | Error::Io(_) => true,
            Error::Column { source, .. } => source.is_validation(),
            Error::Calibration(_) | Error::NonConvergence { .. } | Error::SingularJacobian { .. } => {
                false
            }
        }
    }
}
