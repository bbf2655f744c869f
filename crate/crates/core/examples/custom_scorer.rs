//! Plugging in your own model: a scorer that prefers copying the source.

use lmbr_beam::scorer::{BatchState, ScoreBlock, StateRow};
use lmbr_beam::{decode, DecoderConfig, Result, Scorer, SourceContext, TokenId};

/// State row: the next source position to copy.
struct Copier {
    vocab: usize,
}

impl Scorer for Copier {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        Ok((SourceContext::new(source), BatchState::new(vec![StateRow(vec![0])])))
    }

    fn step(
        &self,
        prev: &BatchState,
        _prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        let mut values = Vec::with_capacity(prev.len() * self.vocab);
        let mut rows = Vec::with_capacity(prev.len());
        for (j, row) in prev.rows().iter().enumerate() {
            let src = contexts[if contexts.len() == 1 { 0 } else { j }].tokens();
            let pos = row.0[0] as usize;
            let want = src.get(pos).copied().unwrap_or(TokenId::EOS);
            let mut logits: Vec<f64> = (0..self.vocab).map(|y| if y == want.index() { 3.0 } else { 0.0 }).collect();
            let z = logits.iter().map(|x| x.exp()).sum::<f64>().ln();
            logits.iter_mut().for_each(|x| *x -= z);
            values.extend(logits);
            rows.push(StateRow(vec![pos as u32 + 1]));
        }
        Ok((ScoreBlock::new(prev.len(), self.vocab, values)?, BatchState::new(rows)))
    }
}

fn main() -> Result<()> {
    let scorer = Copier { vocab: 8 };
    let src: Vec<TokenId> = [5, 3, 7, 2].into_iter().map(TokenId).collect();
    let r = decode(&src, &scorer, None, &DecoderConfig::default(), None)?;
    println!("source {src:?}\noutput {:?}", r.tokens);
    Ok(())
}
