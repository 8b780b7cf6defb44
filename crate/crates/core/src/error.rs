use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },
    #[error("grid too small: {cells_w}x{cells_h} cells, need at least {min}x{min}")]
    GridTooSmall { cells_w: usize, cells_h: usize, min: usize },
    #[error("histogram shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("input directory missing: {}", .0.display())]
    InputDirMissing(PathBuf),
    #[error("output directory not writable: {}: {source}", path.display())]
    OutputNotWritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("nothing to render")]
    EmptyInput,
    #[error("port {0} already in use")]
    PortInUse(u16),
    #[error("not found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures that stem from the filesystem or network rather than bad input.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::OutputNotWritable { .. } | Error::InputDirMissing(_) | Error::PortInUse(_)
        )
    }
}
