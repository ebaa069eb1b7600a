use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity: {edges} edges requested but a simple digraph on {nodes} nodes holds at most {max}")]
    Capacity { nodes: usize, edges: usize, max: usize },

    #[error("surrogate: in-degree {k} cannot be realized on {nodes} nodes ({reason})")]
    Surrogate { k: usize, nodes: usize, reason: String },

    #[error("parse: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("degenerate evidence: both likelihoods are zero")]
    DegenerateEvidence,

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-parsable category, used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Capacity { .. } => "capacity",
            Error::Surrogate { .. } => "surrogate",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::DegenerateEvidence => "degenerate-evidence",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
