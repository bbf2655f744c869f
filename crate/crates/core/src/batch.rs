//! Sentence batching: `N` sentences decoded together, `B · N` model
//! queries per step.
//!
//! Sentence `n` owns rows `[n·B, (n+1)·B)` of the stacked state and score
//! block for the whole run. A sentence that finishes keeps its rows in the
//! stack, untouched, until the last sentence of the batch is done.

use crate::config::DecoderConfig;
use crate::decoder::{max_steps, top_b, BeamSetup, DecodeResult, SentenceBeam, TopB};
use crate::error::{Error, Result};
use crate::lmbr::LmbrMatrix;
use crate::scorer::{BatchState, Scorer, SourceContext};
use crate::vocab::TokenId;

#[derive(Debug)]
pub struct BatchOutput {
    /// One result per input sentence, in input order.
    pub results: Vec<Result<DecodeResult>>,
    /// Model calls issued for the whole batch.
    pub scorer_calls: usize,
    /// Widest model call, in rows.
    pub max_rows: usize,
}

struct Slot<'a> {
    index: usize,
    beam: SentenceBeam<'a>,
    ctx: SourceContext,
    failed: Option<Error>,
}

/// Decodes `sources` together. Result `n` equals what [`crate::decode`]
/// returns for `sources[n]` alone; a failing sentence does not affect the
/// others.
pub fn decode_batch<S: Scorer + ?Sized, T: AsRef<[TokenId]>>(
    sources: &[T],
    scorer: &S,
    lmbrs: &[Option<&LmbrMatrix>],
    cfg: &DecoderConfig,
) -> Result<BatchOutput> {
    cfg.validate()?;
    if lmbrs.len() != sources.len() {
        return Err(Error::Contract(format!(
            "{} sentences but {} LMBR entries",
            sources.len(),
            lmbrs.len()
        )));
    }
    let beam = cfg.beam_size;
    let vocab = scorer.vocab_size();
    let lambda = cfg.lambda.resolve(scorer.members());

    let mut results: Vec<Option<Result<DecodeResult>>> = (0..sources.len()).map(|_| None).collect();
    let mut slots = Vec::new();
    let mut inits = Vec::new();
    for (n, src) in sources.iter().enumerate() {
        let src = src.as_ref();
        let setup = BeamSetup {
            beam,
            vocab,
            max_steps: max_steps(src.len(), cfg),
            lambda,
            lmbr: lmbrs[n],
            prune_width: cfg.prune_width,
            length_norm: cfg.length_norm,
            mask: None,
        };
        let started = scorer.init_source(src).and_then(|(ctx, init)| {
            let init = init.gather(&vec![0; beam])?;
            Ok((ctx, init, SentenceBeam::new(setup)?))
        });
        match started {
            Ok((ctx, init, sb)) => {
                inits.push(init);
                slots.push(Slot {
                    index: n,
                    beam: sb,
                    ctx,
                    failed: None,
                });
            }
            Err(e) => results[n] = Some(Err(e)),
        }
    }

    let mut state = BatchState::concat(&inits);
    drop(inits);
    let mut scorer_calls = 0;
    let mut max_rows = 0;
    let mut tokens = Vec::with_capacity(slots.len() * beam);
    let mut idx = Vec::with_capacity(slots.len() * beam);

    while slots.iter().any(|s| s.failed.is_none() && !s.beam.is_done()) {
        tokens.clear();
        for s in &slots {
            tokens.extend_from_slice(s.beam.last_tokens());
        }
        let contexts: Vec<&SourceContext> = slots
            .iter()
            .flat_map(|s| std::iter::repeat(&s.ctx).take(beam))
            .collect();
        let (block, next) = match scorer.step(&state, &tokens, &contexts) {
            Ok(out) => out,
            Err(e) => {
                let msg = e.to_string();
                for s in slots.iter_mut().filter(|s| !s.beam.is_done()) {
                    s.failed.get_or_insert_with(|| Error::Contract(msg.clone()));
                }
                break;
            }
        };
        scorer_calls += 1;
        max_rows = max_rows.max(state.len());

        idx.clear();
        for (k, s) in slots.iter_mut().enumerate() {
            let offset = k * beam;
            let active = s.failed.is_none() && !s.beam.is_done();
            let rows = &block.values()[offset * vocab..(offset + beam) * vocab];
            match active.then(|| s.beam.advance(rows)) {
                Some(Ok(b)) => idx.extend(b.iter().map(|&r| offset + r)),
                Some(Err(e)) => {
                    s.failed = Some(e);
                    idx.extend(offset..offset + beam);
                }
                None => idx.extend(offset..offset + beam),
            }
        }
        state = next.gather(&idx)?;
    }

    for s in slots {
        results[s.index] = Some(match s.failed {
            Some(e) => Err(e),
            None => s.beam.finish().map(|(r, _)| r),
        });
    }
    Ok(BatchOutput {
        results: results.into_iter().map(|r| r.expect("every sentence has a result")).collect(),
        scorer_calls,
        max_rows,
    })
}

/// Top-B selection applied independently to each sentence's `B`-row block
/// of a stacked `(B·N) × V` matrix, after adding the running scores `q`.
/// Indices are local to each block.
pub fn per_sentence_top_b(stacked: &[f64], q: &[f64], beam: usize, vocab: usize) -> Vec<TopB> {
    assert_eq!(stacked.len(), q.len() * vocab, "stacked matrix shape");
    assert_eq!(q.len() % beam, 0, "rows must be a multiple of the beam");
    stacked
        .chunks(beam * vocab)
        .zip(q.chunks(beam))
        .map(|(block, qs)| {
            let combined: Vec<f64> = block
                .chunks(vocab)
                .zip(qs)
                .flat_map(|(row, &qj)| row.iter().map(move |&x| x + qj))
                .collect();
            top_b(&combined, vocab, beam)
        })
        .collect()
}

/// Groups sentence indices into batches of at most `max_batch`, shortest
/// sentences first. Equal lengths keep corpus order.
pub fn bucket_by_length<S: AsRef<[T]>, T>(corpus: &[S], max_batch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by_key(|&i| corpus[i].as_ref().len());
    order.chunks(max_batch.max(1)).map(<[usize]>::to_vec).collect()
}

/// Consecutive batches in corpus order.
pub fn batches_in_order(len: usize, max_batch: usize) -> Vec<Vec<usize>> {
    (0..len)
        .collect::<Vec<_>>()
        .chunks(max_batch.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

/// Undoes a bucketing: `outputs[k][i]` belongs to sentence `batches[k][i]`.
pub fn restore_order<T>(batches: &[Vec<usize>], outputs: Vec<Vec<T>>) -> Vec<T> {
    let total = batches.iter().map(Vec::len).sum();
    let mut slots: Vec<Option<T>> = (0..total).map(|_| None).collect();
    for (batch, outs) in batches.iter().zip(outputs) {
        assert_eq!(batch.len(), outs.len(), "batch output size");
        for (&i, out) in batch.iter().zip(outs) {
            slots[i] = Some(out);
        }
    }
    slots
        .into_iter()
        .map(|s| s.expect("batches cover the corpus"))
        .collect()
}
