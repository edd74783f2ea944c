use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration error in {file} at `{key}`: {message}")]
    ConfigKey {
        file: PathBuf,
        key: String,
        message: String,
    },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("budget error: {0}")]
    Budget(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("authentication failed for backend `{backend}`: {message}")]
    Auth { backend: String, message: String },

    #[error("result store corrupted at {path}:{line}: {message}")]
    StoreCorrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("corpus checksum mismatch: manifest has {expected}, corpus on disk hashes to {actual}")]
    Checksum { expected: String, actual: String },

    #[error("missing artifact {path}; run `{subcommand}` first")]
    MissingArtifact { path: PathBuf, subcommand: String },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
