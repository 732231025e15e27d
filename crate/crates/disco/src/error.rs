use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A config file or override could not be accepted. `line` is 0 for
    /// problems that involve several keys at once.
    #[error("{}", config_message(*.line, .key, .message))]
    Config {
        line: usize,
        key: String,
        message: String,
    },
    /// A checkpoint is corrupt, truncated or of an unsupported version.
    #[error("checkpoint line {line}: {message}")]
    Persistence { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] disco_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn config_message(line: usize, key: &str, message: &str) -> String {
    if line == 0 {
        format!("config: {key}: {message}")
    } else {
        format!("config line {line}: {key}: {message}")
    }
}

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
