use std::path::PathBuf;

use thiserror::Error;

use crate::vocab::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed vocabulary, evidence, config or model file.
    #[error("format error: {0}")]
    Format(String),

    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),

    #[error("token id {token} out of range for vocabulary size {vocab_size}")]
    Range { token: TokenId, vocab_size: usize },

    /// Caller violated a dimension or shape contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Every beam row was masked before any EOS candidate was recorded.
    #[error("dead beam at step {step}: no live hypothesis and no EOS candidate recorded")]
    DeadBeam { step: usize },

    #[error("oracle budget exceeded: {sequences} sequences > ceiling {ceiling}")]
    Budget { sequences: u128, ceiling: u128 },

    #[error("{path}: {source}")]
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
