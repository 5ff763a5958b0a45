use std::path::PathBuf;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {requested} exceeds the configured cap {cap}")]
    ResourceCap {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("target {target} is outside the attainable range ({low}, {high})")]
    OutOfRange { target: f64, low: f64, high: f64 },

    #[error("envelope violated at t={t}, site ({a},{b}): value {value:e} > bound {bound:e}")]
    EnvelopeViolated {
        t: u32,
        a: i32,
        b: i32,
        value: f64,
        bound: f64,
    },

    #[error("no separating interface: {0}")]
    NoInterface(String),

    #[error("front tracing failed: {0}")]
    Trace(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceCap { .. } => 3,
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidRegion(_) => 2,
            _ => 1,
        }
    }
}
