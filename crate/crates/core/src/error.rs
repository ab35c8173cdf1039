use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum DlgnError {
    /// A caller broke a precondition (bad gate id, stale buffers, mismatched shapes).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A real input fell outside the domain of a probabilistic surrogate.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite values showed up in parameters, loss or gradients.
    #[error("numeric abort{}: {message}", layer.map(|l| format!(" at layer {l}")).unwrap_or_default())]
    Numeric {
        layer: Option<usize>,
        message: String,
    },

    /// Inconsistent network, training or run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed text input (netlist, config file, CSV) with its 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A structurally well-formed artifact violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DlgnError {
    pub fn numeric(layer: Option<usize>, message: impl Into<String>) -> Self {
        DlgnError::Numeric {
            layer,
            message: message.into(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, DlgnError::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, DlgnError>;
