//! Beam search with an on-the-fly linearised LMBR objective.
//!
//! A [`Scorer`] supplies next-token log-probabilities for a batch of beam
//! rows; [`decode`] runs one sentence, [`decode_batch`] stacks several.
//! When an [`LmbrMatrix`] built from n-best evidence is supplied, each
//! candidate is scored with `λ·log P + L(history, y)` instead of the model
//! score alone.

pub mod batch;
pub mod bench;
pub mod check;
pub mod cli;
pub mod config;
pub mod decoder;
pub mod error;
pub mod lmbr;
pub mod oracle;
pub mod scorer;
pub mod synthetic;
pub mod vocab;

pub use batch::{decode_batch, BatchOutput};
pub use config::{DecoderConfig, Lambda};
pub use decoder::{decode, decode_with_trace, ConstraintMask, DecodeResult, DecodeStats};
pub use error::{Error, Result};
pub use lmbr::{build_lmbr_matrix, compute_ngram_posteriors, EvidenceSpace, LmbrMatrix, LmbrParams};
pub use scorer::{BatchState, ScoreBlock, Scorer, SourceContext, StateRow};
pub use vocab::{TokenId, Vocabulary};
