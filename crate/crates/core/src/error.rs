use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("choice {value} of vertex {vertex} is outside [1, {max}]")]
    ChoiceOutOfRange { vertex: u32, value: u32, max: u32 },

    #[error("enumeration of {required} items exceeds the cap of {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("subset sizes differ ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },

    #[error("subsets are not comparable in the componentwise order")]
    NotComparable,

    #[error("pivot {pivot} out of range for n = {n}")]
    PivotOutOfRange { pivot: u32, n: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no sign change of the threshold function on the initial bracket (k = {k})")]
    NoSignChange { k: u32 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("failed to write {path} (already written: {written}): {source}")]
    Output {
        path: String,
        written: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
