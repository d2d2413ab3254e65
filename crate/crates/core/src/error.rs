use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("instance document: {0}")]
    Document(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("instance fails validation ({} violations), first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<crate::domain::Violation>),
    #[error("generator cannot satisfy {constraint}: {detail}")]
    Generation { constraint: String, detail: String },
    #[error("model is infeasible: {0}")]
    Infeasible(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("integer variable {name} = {value} is not integral")]
    NonIntegral { name: String, value: f64 },
    #[error("MPS: {0}")]
    Mps(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("event log: {0}")]
    Log(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
