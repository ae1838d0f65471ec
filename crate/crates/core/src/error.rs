use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("unknown gate id {0}")]
    UnknownGate(usize),

    #[error("unknown gate name `{0}`")]
    UnknownGateName(String),

    #[error("unknown channel id {0}")]
    UnknownChannel(usize),

    #[error("unknown dot id {0}")]
    UnknownDot(usize),

    #[error("dot `{0}` has no paired charge sensor")]
    UnpairedDot(String),

    #[error("sensor `{0}` is not tuned for charge sensing")]
    SensorNotTuned(String),

    #[error("cross-conductance needs two distinct channels, got `{0}` twice")]
    SameChannel(String),

    #[error("layout has no mirror symmetry: {0}")]
    Asymmetric(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge: {message} (residual {residual:.3e})")]
    Fit { message: String, residual: f64 },

    #[error("malformed {what} at line {line}: {message}")]
    Format {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("schema version mismatch for {what}: found {found}, expected {expected}")]
    SchemaVersion {
        what: String,
        found: u32,
        expected: u32,
    },

    #[error("unknown format `{given}`; supported formats: {}", supported.join(", "))]
    UnknownFormat {
        given: String,
        supported: Vec<&'static str>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{failed} device(s) could not be written; partial manifest at {}", manifest.display())]
    Partial { manifest: PathBuf, failed: usize },

    #[error("toml error: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
