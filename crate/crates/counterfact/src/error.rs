//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants keep enough context
//! (file, row, column, layer index, field name) for an error message to point
//! at the offending input without a debugger.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke an API contract (dimension mismatch and friends).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data is structurally valid but semantically unusable.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The iterative solver produced a non-finite objective.
    #[error("solver diverged at iteration {iteration} (objective became non-finite); try a smaller step_size than {step_size}")]
    Divergence { iteration: usize, step_size: f64 },

    /// A serialized artifact does not match its schema.
    #[error("deserialization error in {field}: {message}")]
    Deserialization { field: String, message: String },

    /// A tabular file violates the expected schema.
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    /// A cell failed to parse. Row and column are 1-based data coordinates.
    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    /// Unknown rating symbol or out-of-range ordinal.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// A statistic is undefined for the given sample (e.g. zero variance).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A rate with an empty denominator; reported as absent, never as zero.
    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    /// Aggregation inputs are mutually inconsistent.
    #[error("data integrity error: {0}")]
    DataIntegrity(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
