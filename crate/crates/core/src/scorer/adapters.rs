use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::Result;
use crate::scorer::{BatchState, ScoreBlock, Scorer, SourceContext};
use crate::vocab::TokenId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CallStats {
    pub calls: u64,
    pub rows: u64,
}

/// Counts `step` invocations and the rows they carried.
pub struct CountingScorer<S> {
    inner: S,
    calls: AtomicU64,
    rows: AtomicU64,
}

impl<S: Scorer> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
            rows: AtomicU64::new(0),
        }
    }

    pub fn stats(&self) -> CallStats {
        CallStats {
            calls: self.calls.load(Ordering::Relaxed),
            rows: self.rows.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
        self.rows.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: Scorer> Scorer for CountingScorer<S> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
    fn members(&self) -> usize {
        self.inner.members()
    }
    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        self.inner.init_source(source)
    }
    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.rows.fetch_add(prev.len() as u64, Ordering::Relaxed);
        self.inner.step(prev, prev_tokens, contexts)
    }
}

/// Issues one inner `step` per row: beam decoding without query batching.
/// Results are identical to the batched call because rows are independent.
pub struct RowwiseScorer<S> {
    inner: S,
}

impl<S: Scorer> RowwiseScorer<S> {
    pub fn new(inner: S) -> Self {
        Self { inner }
    }
}

impl<S: Scorer> Scorer for RowwiseScorer<S> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
    fn members(&self) -> usize {
        self.inner.members()
    }
    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        self.inner.init_source(source)
    }
    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        crate::scorer::check_step(prev, prev_tokens, contexts, self.vocab_size())?;
        let v = self.vocab_size();
        let mut values = Vec::with_capacity(prev.len() * v);
        let mut rows = Vec::with_capacity(prev.len());
        for j in 0..prev.len() {
            let one = BatchState::new(vec![prev.rows()[j].clone()]);
            let ctx = contexts[if contexts.len() == 1 { 0 } else { j }];
            let (block, next) = self.inner.step(&one, &prev_tokens[j..=j], &[ctx])?;
            values.extend_from_slice(block.values());
            rows.extend(next.into_rows());
        }
        Ok((ScoreBlock::new(prev.len(), v, values)?, BatchState::new(rows)))
    }
}
