use std::path::PathBuf;

/// Crate-wide error type.
///
/// Variants group into the four CLI exit classes: I/O and malformed input
/// (exit 2), fingerprint mismatches between artifacts (exit 3), and numeric
/// failures such as non-finite losses (exit 4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("bad file format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {op}: {msg}")]
    Shape { op: &'static str, msg: String },

    #[error("vocabulary fingerprint mismatch: {0}")]
    Fingerprint(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 bad input, 3 fingerprint mismatch,
    /// 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::Format { .. }
            | Error::Config(_) => 2,
            Error::Fingerprint(_) => 3,
            Error::Shape { .. } | Error::NonFinite(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
