use std::fmt;

/// Exit code 2 for bad input, 3 for numerical failures, 1 for I/O.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical { op: String, k: Option<f64>, message: String },
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Wraps a library error raised by `op`, splitting input errors from numerical ones.
    pub fn from_core(op: &str, k: Option<f64>, e: halfspace_scattering::Error) -> Self {
        if e.is_validation() {
            let at = k.map(|k| format!(" (k = {k})")).unwrap_or_default();
            CliError::Validation(format!("{op}{at}: {e}"))
        } else {
            CliError::Numerical { op: op.to_string(), k, message: e.to_string() }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical { op, k: Some(k), message } => write!(f, "numerical failure in {op} at k = {k}: {message}"),
            CliError::Numerical { op, k: None, message } => write!(f, "numerical failure in {op}: {message}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
