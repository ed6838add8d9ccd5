use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unphysical Stokes vector at pixel ({x}, {y}): filtered value {value:e}")]
    UnphysicalStokes { x: usize, y: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("sample rejected: {0}")]
    Rejected(String),

    #[error("config: {0}")]
    Config(String),

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Coarse category used for process exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::MissingFile(_) => ErrorCategory::MissingFile,
            Error::Config(_) => ErrorCategory::Config,
            Error::Io { .. } | Error::Image(_) | Error::Json(_) => ErrorCategory::Io,
            Error::Diverged(_) | Error::UnphysicalStokes { .. } | Error::Domain(_) => {
                ErrorCategory::Numerical
            }
            Error::DimensionMismatch(_)
            | Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::EmptyMask
            | Error::Rejected(_) => ErrorCategory::Input,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    MissingFile,
    Config,
    Input,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::MissingFile => 3,
            ErrorCategory::Config => 4,
            ErrorCategory::Input => 5,
            ErrorCategory::Numerical => 6,
            ErrorCategory::Io => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::MissingFile => "missing_file",
            ErrorCategory::Config => "config",
            ErrorCategory::Input => "input",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }
}
