//! Replay scorer backed by explicit per-step score matrices.
//!
//! Step `t` (1-based) reads matrix `steps[t - 1]`, or the last matrix once
//! the recording runs out. A hypothesis occupies row
//! `r_t = (r_{t-1} * V + y_{t-1}) mod R_t` where `R_t` is the row count of
//! that matrix and `r_0 = 0`. With `R_t = V^(t-1)` every distinct prefix gets
//! its own row, so the recording is a fully general prefix-conditioned model.
//!
//! State rows are `[t, r_t]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::{
    check_source, check_step, BatchState, ScoreBlock, Scorer, SourceContext, StateRow,
};
use crate::vocab::TokenId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordedScorer {
    vocab_size: usize,
    steps: Vec<Vec<Vec<f64>>>,
}

impl RecordedScorer {
    pub fn new(vocab_size: usize, steps: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let s = Self { vocab_size, steps };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Format("recorded scorer: vocab_size must be >= 1".into()));
        }
        if self.steps.is_empty() {
            return Err(Error::Format("recorded scorer: no steps".into()));
        }
        for (t, m) in self.steps.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::Format(format!("recorded scorer: step {t} has no rows")));
            }
            for row in m {
                if row.len() != self.vocab_size {
                    return Err(Error::Format(format!(
                        "recorded scorer: step {t} row has {} entries, expected {}",
                        row.len(),
                        self.vocab_size
                    )));
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Format(format!(
                        "recorded scorer: step {t} has a non-finite entry"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("recorded scorer serializes")
    }

    pub fn steps(&self) -> &[Vec<Vec<f64>>] {
        &self.steps
    }

    /// Matrix used at 1-based step `t`.
    pub fn matrix(&self, t: usize) -> &[Vec<f64>] {
        let i = t.saturating_sub(1).min(self.steps.len() - 1);
        &self.steps[i]
    }

    /// Row of the step-`t` matrix reached from row `prev_row` by `token`.
    pub fn next_row(&self, t: usize, prev_row: u32, token: TokenId) -> u32 {
        let rows = self.matrix(t).len() as u64;
        ((prev_row as u64 * self.vocab_size as u64 + token.0 as u64) % rows) as u32
    }
}

impl Scorer for RecordedScorer {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        check_source(source, self.vocab_size)?;
        Ok((
            SourceContext::new(source),
            BatchState::new(vec![StateRow(vec![0, 0])]),
        ))
    }

    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        check_step(prev, prev_tokens, contexts, self.vocab_size)?;
        let mut values = Vec::with_capacity(prev.len() * self.vocab_size);
        let mut next = Vec::with_capacity(prev.len());
        for (row, &tok) in prev.rows().iter().zip(prev_tokens) {
            let (t, r) = match row.0.as_slice() {
                &[t, r] => (t as usize + 1, r),
                _ => {
                    return Err(Error::Contract(format!(
                        "recorded scorer state row {:?} is not [t, r]",
                        row.0
                    )))
                }
            };
            let r = self.next_row(t, r, tok);
            values.extend_from_slice(&self.matrix(t)[r as usize]);
            next.push(StateRow(vec![t as u32, r]));
        }
        Ok((
            ScoreBlock::new(prev.len(), self.vocab_size, values)?,
            BatchState::new(next),
        ))
    }
}
