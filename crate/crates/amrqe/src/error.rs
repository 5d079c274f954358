use std::path::{Path, PathBuf};

use amrqe_core::amr::ParseError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Format { path: PathBuf, line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Penman { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Core(#[from] amrqe_core::Error),
    #[error(transparent)]
    ModelFile(#[from] crate::modelfile::ModelFileError),
    #[error("{0}")]
    Usage(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl AppError {
    /// Stable category name for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Io { .. } => "io",
            AppError::Format { .. } => "format",
            AppError::Penman { .. } => "penman",
            AppError::Core(_) => "invalid-data",
            AppError::ModelFile(_) => "model-file",
            AppError::Usage(_) => "usage",
            AppError::Json(_) => "json",
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        AppError::Format { path: path.to_path_buf(), line, msg: msg.into() }
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| AppError::io(path, e))
}
