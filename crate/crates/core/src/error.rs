use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate column {column}: l2 norm {norm:.3e} (representation collapse)")]
    DegenerateColumn { column: usize, norm: f64 },

    #[error("degenerate row {row}: l2 norm {norm:.3e}")]
    DegenerateRow { row: usize, norm: f64 },

    #[error("cluster {0} received zero total assignment mass")]
    DegenerateCluster(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: node index {index} out of range for n = {n}", path.display())]
    IndexOutOfRange {
        path: PathBuf,
        line: usize,
        index: usize,
        n: usize,
    },

    #[error("{}: expected {expected} rows, found {found}", path.display())]
    RowCount {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            op,
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 1 = usage/configuration, 2 = data error, 3 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::IndexOutOfRange { .. }
            | Error::RowCount { .. }
            | Error::NotSymmetric(_)
            | Error::NegativeEntry { .. }
            | Error::Shape { .. } => 2,
            Error::NonFinite(_)
            | Error::DegenerateColumn { .. }
            | Error::DegenerateRow { .. }
            | Error::DegenerateCluster(_)
            | Error::Domain(_)
            | Error::Divergence { .. } => 3,
        }
    }
}
