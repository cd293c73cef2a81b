use thiserror::Error;

/// Errors shared across the crate. Numerical failures (divergence,
/// non-finite values) are kept distinct from input validation so callers
/// can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },

    #[error("backward requires a scalar loss, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("tensor {id} does not belong to this tape (tape has {len} nodes)")]
    UnknownTensor { id: usize, len: usize },

    #[error("invalid graph: {reason}")]
    InvalidGraph { reason: String },

    #[error("graph is disconnected (node {node} unreachable from node {from})")]
    Disconnected { node: usize, from: usize },

    #[error("generator {generator} failed to produce a connected graph after {attempts} attempts")]
    ConnectivityRetriesExhausted {
        generator: &'static str,
        attempts: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state diverged at layer {layer}: max |entry| = {max_abs:.3e} exceeds {limit:.1e}")]
    Divergence {
        layer: usize,
        max_abs: f64,
        limit: f64,
    },

    #[error("non-finite gradient for parameter \"{name}\"")]
    NonFiniteGradient { name: String },

    #[error("antisymmetry violated: max |S + S^T| = {residual:.3e} exceeds {limit:.1e}")]
    AntisymmetryViolated { residual: f64, limit: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    EigensolverStalled { sweeps: usize, off_norm: f64 },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error("invalid data in {path}: {reason}")]
    InvalidData { path: String, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical process itself, as opposed to bad
    /// inputs or io trouble.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Divergence { .. }
                | Error::NonFiniteGradient { .. }
                | Error::AntisymmetryViolated { .. }
                | Error::EigensolverStalled { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
