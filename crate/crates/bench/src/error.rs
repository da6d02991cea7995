use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl BenchError {
    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        BenchError::Data { path: path.to_path_buf(), message: message.into() }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        BenchError::Io { path: path.to_path_buf(), source }
    }

    /// 1 usage, 2 data, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Data { .. } => 2,
            BenchError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            BenchError::Io { .. } | BenchError::Runtime(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| BenchError::io(path, e))
}
