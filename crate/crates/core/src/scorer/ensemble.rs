use crate::error::{Error, Result};
use crate::scorer::{check_step, BatchState, ScoreBlock, Scorer, SourceContext, StateRow};
use crate::vocab::TokenId;

/// Sum of member log-probabilities. The decoder applies λ once to the sum.
///
/// A state row is the concatenation of each member's row, each prefixed
/// by its length.
pub struct Ensemble {
    members: Vec<Box<dyn Scorer>>,
    vocab_size: usize,
}

pub fn combine_ensemble(members: Vec<Box<dyn Scorer>>) -> Result<Ensemble> {
    let vocab_size = members
        .first()
        .ok_or_else(|| Error::Contract("ensemble needs at least one member".into()))?
        .vocab_size();
    if let Some(m) = members.iter().find(|m| m.vocab_size() != vocab_size) {
        return Err(Error::Contract(format!(
            "ensemble vocabulary mismatch: {} vs {vocab_size}",
            m.vocab_size()
        )));
    }
    Ok(Ensemble {
        members,
        vocab_size,
    })
}

impl Ensemble {
    fn pack(parts: &[BatchState]) -> BatchState {
        let rows = parts[0].len();
        let packed = (0..rows)
            .map(|j| {
                let mut row = Vec::new();
                for p in parts {
                    let r = &p.rows()[j].0;
                    row.push(r.len() as u32);
                    row.extend_from_slice(r);
                }
                StateRow(row)
            })
            .collect();
        BatchState::new(packed)
    }

    fn unpack(&self, state: &BatchState) -> Result<Vec<BatchState>> {
        let mut parts = vec![Vec::with_capacity(state.len()); self.members.len()];
        for row in state.rows() {
            let mut rest = row.0.as_slice();
            for part in parts.iter_mut() {
                let (&len, tail) = rest
                    .split_first()
                    .ok_or_else(|| Error::Contract("truncated ensemble state row".into()))?;
                let len = len as usize;
                if tail.len() < len {
                    return Err(Error::Contract("truncated ensemble state row".into()));
                }
                part.push(StateRow(tail[..len].to_vec()));
                rest = &tail[len..];
            }
        }
        Ok(parts.into_iter().map(BatchState::new).collect())
    }
}

impl Scorer for Ensemble {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn members(&self) -> usize {
        self.members.iter().map(|m| m.members()).sum()
    }

    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        let mut ctx = None;
        let mut parts = Vec::with_capacity(self.members.len());
        for m in &self.members {
            let (c, s) = m.init_source(source)?;
            if s.len() != 1 {
                return Err(Error::Contract("member initial state must have one row".into()));
            }
            ctx.get_or_insert(c);
            parts.push(s);
        }
        Ok((ctx.expect("non-empty ensemble"), Self::pack(&parts)))
    }

    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        check_step(prev, prev_tokens, contexts, self.vocab_size)?;
        let mut sum: Option<Vec<f64>> = None;
        let mut next = Vec::with_capacity(self.members.len());
        for (m, part) in self.members.iter().zip(self.unpack(prev)?) {
            let (block, state) = m.step(&part, prev_tokens, contexts)?;
            match sum.as_mut() {
                None => sum = Some(block.into_values()),
                Some(acc) => acc.iter_mut().zip(block.values()).for_each(|(a, b)| *a += b),
            }
            next.push(state);
        }
        let values = sum.expect("non-empty ensemble");
        Ok((
            ScoreBlock::new(prev.len(), self.vocab_size, values)?,
            Self::pack(&next),
        ))
    }
}
