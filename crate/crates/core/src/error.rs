use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch for record {id:?}: expected {expected}, found {found}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("record {id:?} has a non-finite component at position {position}")]
    NonFinite { id: String, position: usize },

    #[error("duplicate record (id {id:?}, label {label:?})")]
    DuplicateRecord { id: String, label: String },

    #[error("invalid {field} {value:?}: {reason}")]
    InvalidField {
        field: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("input contains no records")]
    EmptyInput,

    #[error("bad magic bytes {0:02x?}, expected VPED")]
    BadMagic([u8; 4]),

    #[error("unsupported VPED version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated VPED file: {0}")]
    Truncated(String),

    #[error("VPED header declares {declared} records but file holds {actual}")]
    CountMismatch { declared: u64, actual: u64 },

    #[error("class {0:?} has no records")]
    EmptyClass(String),

    #[error("record {id:?} has a zero-norm vector")]
    ZeroNorm { id: String },

    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("class {label:?}: {source}")]
    InClass {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("class {label:?}: subgroup proportions sum to {sum}, expected 1")]
    ProportionSum { label: String, sum: f64 },

    #[error("manifest does not match dataset: {0}")]
    ManifestMismatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_class(self, label: &str) -> Self {
        Error::InClass {
            label: label.to_owned(),
            source: Box::new(self),
        }
    }
}
