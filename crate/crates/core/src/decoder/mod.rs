//! Batched beam decoding of one sentence with optional LMBR scores.
//!
//! Every step runs one model call over all `B` beam rows and then
//!
//! 1. scales the model block by λ and adds the LMBR row of each row's
//!    history (skipped in pure model mode),
//! 2. adds the running hypothesis scores,
//! 3. applies the constraint mask and early pruning,
//! 4. keeps the best `B` cells of the whole `B × V` block,
//! 5. gathers the model state rows by backpointer, and
//! 6. moves EOS candidates to the finished set and masks their rows.
//!
//! EOS candidates compete for beam slots like any other token. The best EOS
//! extension of every step is also kept on a separate fallback stack, used
//! only when no EOS candidate ever makes it into the beam.

mod beam;
mod ops;

pub use beam::{
    backtrace_best, BeamBookkeeping, DecodeResult, DecodeStats, DecodeTrace, FallbackEntry,
    Selection,
};
pub(crate) use beam::{BeamSetup, SentenceBeam};
pub use ops::{
    apply_constraint_mask, apply_eos_masking, early_prune, gather_matrix_rows, gather_rows,
    max_steps, top_b, ConstraintMask, FinishedEntry, TokenBlacklist, TopB, MASKED,
};

use crate::config::DecoderConfig;
use crate::error::Result;
use crate::lmbr::LmbrMatrix;
use crate::scorer::Scorer;
use crate::vocab::TokenId;

/// Decodes `source`. Without `lmbr` this is a plain beam decoder and λ is
/// ignored.
pub fn decode<S: Scorer + ?Sized>(
    source: &[TokenId],
    scorer: &S,
    lmbr: Option<&LmbrMatrix>,
    cfg: &DecoderConfig,
    mask: Option<&dyn ConstraintMask>,
) -> Result<DecodeResult> {
    decode_with_trace(source, scorer, lmbr, cfg, mask).map(|(r, _)| r)
}

/// [`decode`], also returning the bookkeeping it traced the result through.
pub fn decode_with_trace<S: Scorer + ?Sized>(
    source: &[TokenId],
    scorer: &S,
    lmbr: Option<&LmbrMatrix>,
    cfg: &DecoderConfig,
    mask: Option<&dyn ConstraintMask>,
) -> Result<(DecodeResult, DecodeTrace)> {
    cfg.validate()?;
    let (ctx, init) = scorer.init_source(source)?;
    let mut beam = SentenceBeam::new(BeamSetup {
        beam: cfg.beam_size,
        vocab: scorer.vocab_size(),
        max_steps: max_steps(source.len(), cfg),
        lambda: cfg.lambda.resolve(scorer.members()),
        lmbr,
        prune_width: cfg.prune_width,
        length_norm: cfg.length_norm,
        mask,
    })?;
    let mut state = init.gather(&vec![0; cfg.beam_size])?;
    while !beam.is_done() {
        let (block, next) = scorer.step(&state, beam.last_tokens(), &[&ctx])?;
        let b = beam.advance(block.values())?;
        state = next.gather(&b)?;
    }
    beam.finish()
}
