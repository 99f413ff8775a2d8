use std::path::PathBuf;

/// Errors produced by every module of the crate.
///
/// The variants fall into two families: caller mistakes (`Param`, `Usage`)
/// and problems with external data (`Io`, `Format`, `Image`). The CLI maps
/// the first family to exit code 1 and the second to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Param(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("cannot decode image {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad arguments rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Param(_) | Error::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
