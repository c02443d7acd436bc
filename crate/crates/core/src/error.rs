use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (non-hyperbolic
    /// state, degenerate lift, inadmissible interface, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller misuse: bad axis index, asymmetric matrix, missing history.
    #[error("usage error: {0}")]
    Usage(String),

    /// Configuration rejected during validation. `field` names the offending key.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    /// A numerical procedure failed (singular boundary solve, blow-up, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The time integrator detected unbounded growth and stopped.
    #[error("run aborted at step {step} (t = {time:.6e}): {reason}")]
    Aborted {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Aborted { .. })
    }

    /// Process exit code: 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::Config { .. } => "config",
            Error::Numerical(_) => "numerical",
            Error::Aborted { .. } => "aborted",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
        }
    }

    pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
