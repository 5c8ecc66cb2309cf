use thiserror::Error;

/// Errors surfaced by the library.
///
/// The CLI maps [`Error::Config`] and [`Error::Domain`] to exit code 2 and the
/// data-related variants to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("ALFD calibration failed: {message}")]
    CalibrationFailure {
        message: String,
        diagnostics: Box<crate::alfd::CalibrationDiagnostics>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by the data rather than by the configuration.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::DegenerateData(_)
            | Error::InsufficientData { .. }
            | Error::Estimation(_)
            | Error::Parse { .. } => true,
            Error::Context { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
