//! The batched left-to-right model function.
//!
//! A [`Scorer`] maps a batch of `B` hypothesis states plus the `B` tokens
//! they just emitted to a `B × V` block of next-token log-probabilities and
//! the `B` successor states. Row `j` of every output depends only on row `j`
//! of the inputs, which is what lets the decoder gather, duplicate and stack
//! rows freely.

mod adapters;
mod ensemble;
mod ngram;
mod recorded;

pub use adapters::{CallStats, CountingScorer, RowwiseScorer};
pub use ensemble::{combine_ensemble, Ensemble};
pub use ngram::{build_ngram_scorer, NgramCounts, NgramScorer};
pub use recorded::RecordedScorer;

use std::sync::Arc;

use crate::decoder::gather_rows;
use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// Per-sentence data derived from the source. The bundled scorers are
/// target-side language models and only use the length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceContext {
    tokens: Arc<[TokenId]>,
}

impl SourceContext {
    pub fn new(tokens: &[TokenId]) -> Self {
        Self {
            tokens: tokens.into(),
        }
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn source_length(&self) -> usize {
        self.tokens.len()
    }
}

/// One opaque state record. Each scorer defines its own layout.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StateRow(pub Vec<u32>);

/// The stacked states of all live hypotheses, one row per beam entry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchState {
    rows: Vec<StateRow>,
}

impl BatchState {
    pub fn new(rows: Vec<StateRow>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[StateRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// New state whose row `j` is a copy of row `idx[j]`.
    pub fn gather(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            rows: gather_rows(&self.rows, idx)?,
        })
    }

    /// Stacks several states row-wise, in order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BatchState>) -> Self {
        Self {
            rows: parts
                .into_iter()
                .flat_map(|p| p.rows.iter().cloned())
                .collect(),
        }
    }

    pub(crate) fn into_rows(self) -> Vec<StateRow> {
        self.rows
    }
}

/// Row-major `B × V` matrix of log-probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBlock {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ScoreBlock {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Contract(format!(
                "score block of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged score rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// The batched model function `f(S, y, A) -> (P, S')`.
///
/// Implementations must be deterministic and row-independent. `contexts` is
/// either a single context shared by every row or one context per row.
pub trait Scorer: Send + Sync {
    fn vocab_size(&self) -> usize;

    /// Number of ensemble members folded into one score block.
    fn members(&self) -> usize {
        1
    }

    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)>;

    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn members(&self) -> usize {
        (**self).members()
    }
    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        (**self).init_source(source)
    }
    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        (**self).step(prev, prev_tokens, contexts)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn members(&self) -> usize {
        (**self).members()
    }
    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        (**self).init_source(source)
    }
    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        (**self).step(prev, prev_tokens, contexts)
    }
}

/// Shared precondition checks for `init_source`.
pub(crate) fn check_source(source: &[TokenId], vocab_size: usize) -> Result<()> {
    if source.is_empty() {
        return Err(Error::Contract("empty source sentence".into()));
    }
    check_tokens(source, vocab_size)
}

pub(crate) fn check_tokens(tokens: &[TokenId], vocab_size: usize) -> Result<()> {
    match tokens.iter().find(|t| t.index() >= vocab_size) {
        Some(&token) => Err(Error::Range { token, vocab_size }),
        None => Ok(()),
    }
}

/// Shared precondition checks for `step`.
pub(crate) fn check_step(
    prev: &BatchState,
    prev_tokens: &[TokenId],
    contexts: &[&SourceContext],
    vocab_size: usize,
) -> Result<()> {
    if prev.len() != prev_tokens.len() {
        return Err(Error::Contract(format!(
            "batch state has {} rows but {} previous tokens were given",
            prev.len(),
            prev_tokens.len()
        )));
    }
    if contexts.len() != 1 && contexts.len() != prev.len() {
        return Err(Error::Contract(format!(
            "expected 1 or {} source contexts, got {}",
            prev.len(),
            contexts.len()
        )));
    }
    check_tokens(prev_tokens, vocab_size)
}
