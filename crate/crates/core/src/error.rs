use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sample {index} has dimension {found}, stream dimension is {expected}")]
    StreamDimension {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("degenerate rotation frame: {0}")]
    DegenerateFrame(&'static str),

    #[error("rotation frame is not orthonormal (|u|={u_norm}, |v|={v_norm}, u.v={dot})")]
    FrameNotOrthonormal { u_norm: f64, v_norm: f64, dot: f64 },

    #[error("class {0} has no calibration samples")]
    EmptyClass(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
