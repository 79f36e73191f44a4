use std::path::PathBuf;
use thiserror::Error;

/// Unified error type for graph construction, kernels, generators, and the
/// benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An edge refers to a vertex id outside `0..num_vertices`. The index
    /// identifies the offending edge in construction order.
    #[error("edge {index}: vertex id {id} out of range for {num_vertices} vertices")]
    VertexOutOfRange {
        index: usize,
        id: u32,
        num_vertices: usize,
    },

    /// Two containers that must agree in shape do not.
    #[error("{context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A compressed or coordinate structure violates its format invariants.
    #[error("invalid {format} structure: {reason}")]
    InvalidStructure {
        format: &'static str,
        reason: String,
    },

    /// A kernel precondition does not hold for the given input.
    #[error("kernel contract violation: {0}")]
    ContractViolation(String),

    /// The model cannot be expressed with the requested abstraction.
    #[error("model {model} does not support the {abstraction} abstraction")]
    UnsupportedCombination {
        model: &'static str,
        abstraction: &'static str,
    },

    /// The reduction operator cannot be expressed with the requested
    /// abstraction.
    #[error("reduce op {op} is not supported by the {abstraction} abstraction")]
    UnsupportedReduce {
        op: &'static str,
        abstraction: &'static str,
    },

    /// A scalar or structural parameter is outside its legal range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A text input failed to parse. Line numbers are 1-based.
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    /// The run would exceed the configured memory budget. `bytes` is the
    /// estimated peak auxiliary allocation that was attempted.
    #[error("estimated allocation of {bytes} bytes exceeds the configured limit of {limit} bytes")]
    AllocationLimit { bytes: u64, limit: u64 },

    /// A floating-point payload contains NaN or infinity where finite values
    /// are required.
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stamps the offending path onto an I/O error, which otherwise only
    /// carries the OS-level cause.
    pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Error {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
