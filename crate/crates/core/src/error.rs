use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the modelling, completion, and I/O pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("requested {requested} modes but the model has {available}")]
    ModeCountOutOfRange { requested: usize, available: usize },

    #[error("thin-plate spline needs at least {needed} control points, got {got}")]
    TooFewControlPoints { needed: usize, got: usize },

    #[error("control points {first} and {second} coincide")]
    DuplicateControlPoint { first: usize, second: usize },

    #[error("linear system is rank deficient (rank {rank} of {size})")]
    RankDeficient { rank: usize, size: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header at line {line}: {message}")]
    MalformedHeader { line: usize, message: String },

    #[error("non-triangle face {face} ({location}): {vertices} vertices")]
    NonTriangleFace {
        face: usize,
        location: String,
        vertices: usize,
    },

    #[error("vertex index {index} out of range ({location}, vertex count {vertex_count})")]
    IndexOutOfRange {
        index: i64,
        vertex_count: usize,
        location: String,
    },

    #[error("malformed data ({location}): {message}")]
    MalformedData { location: String, message: String },

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("stored modes are not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
}

impl Error {
    /// Short stable identifier, used for machine-readable CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::TopologyMismatch(_) => "topology_mismatch",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::Degenerate(_) => "degenerate",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::ModeCountOutOfRange { .. } => "mode_count_out_of_range",
            Error::TooFewControlPoints { .. } => "too_few_control_points",
            Error::DuplicateControlPoint { .. } => "duplicate_control_point",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io { .. } => "io",
            Error::MalformedHeader { .. } => "malformed_header",
            Error::NonTriangleFace { .. } => "non_triangle_face",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::MalformedData { .. } => "malformed_data",
            Error::Truncated(_) => "truncated_payload",
            Error::BadMagic { .. } => "bad_magic",
            Error::NotOrthonormal { .. } => "not_orthonormal",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
