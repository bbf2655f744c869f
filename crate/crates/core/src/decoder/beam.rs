use serde::{Deserialize, Serialize};

use crate::decoder::ops::{
    apply_eos_masking, early_prune, top_b, ConstraintMask, FinishedEntry, MASKED,
};
use crate::error::{Error, Result};
use crate::lmbr::{LmbrMatrix, MAX_CONTEXT};
use crate::vocab::TokenId;

/// Per-step backpointers `b`, emitted tokens `y` and cumulative scores `q`.
/// Step 0 holds the initial row: `b = 0`, `y = <s>`, `q = 0` for row 0 and
/// the mask for the remaining rows, which all share row 0's state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamBookkeeping {
    pub b: Vec<Vec<usize>>,
    pub y: Vec<Vec<TokenId>>,
    pub q: Vec<Vec<f64>>,
}

impl BeamBookkeeping {
    pub fn new(beam: usize) -> Self {
        let mut q0 = vec![MASKED; beam];
        q0[0] = 0.0;
        Self {
            b: vec![vec![0; beam]],
            y: vec![vec![TokenId::START; beam]],
            q: vec![q0],
        }
    }

    /// Steps recorded after the initial one.
    pub fn steps(&self) -> usize {
        self.y.len() - 1
    }

    pub fn push(&mut self, b: Vec<usize>, y: Vec<TokenId>, q: Vec<f64>) {
        self.b.push(b);
        self.y.push(y);
        self.q.push(q);
    }

    /// Last `min(3, t + 1)` tokens of the start-padded prefix held by row `j`
    /// after step `t`, oldest first.
    pub fn history(&self, t: usize, j: usize, out: &mut Vec<TokenId>) {
        out.clear();
        let (mut s, mut row) = (t, j);
        loop {
            out.push(self.y[s][row]);
            if s == 0 || out.len() == MAX_CONTEXT {
                break;
            }
            row = self.b[s][row];
            s -= 1;
        }
        out.reverse();
    }

    /// Tokens `y_1 .. y_t` of the hypothesis in row `j` after step `t`.
    pub fn trace(&self, t: usize, j: usize) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(t);
        let (mut s, mut row) = (t, j);
        while s > 0 {
            out.push(self.y[s][row]);
            row = self.b[s][row];
            s -= 1;
        }
        out.reverse();
        out
    }
}

/// Best EOS extension of step `t`, taken from row `prev_row` of step `t - 1`
/// before pruning and top-B selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FallbackEntry {
    pub t: usize,
    pub prev_row: usize,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub steps_used: usize,
    pub scorer_calls: usize,
    pub finished_count: usize,
    pub fallback_used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Ends with exactly one EOS.
    pub tokens: Vec<TokenId>,
    /// Cumulative score of `tokens`.
    pub score: f64,
    /// `score / tokens.len()` under length normalization, else `score`.
    pub normalized_score: f64,
    pub stats: DecodeStats,
}

/// Final hypothesis chosen by [`backtrace_best`].
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub normalized_score: f64,
    pub fallback_used: bool,
}

fn normalized(score: f64, len: usize, length_norm: bool) -> f64 {
    if length_norm {
        score / len as f64
    } else {
        score
    }
}

/// Picks the best finished hypothesis (earliest on ties) and traces it back
/// through the backpointers. When nothing finished inside the beam the
/// fallback stack is searched with the same rule.
pub fn backtrace_best(
    finished: &[FinishedEntry],
    fallback: &[FallbackEntry],
    book: &BeamBookkeeping,
    length_norm: bool,
) -> Result<Selection> {
    fn best<T>(items: &[T], key: impl Fn(&T) -> f64) -> Option<&T> {
        let mut best: Option<(&T, f64)> = None;
        for item in items {
            let k = key(item);
            if best.map_or(true, |(_, bk)| k > bk) {
                best = Some((item, k));
            }
        }
        best.map(|(item, _)| item)
    }

    if let Some(e) = best(finished, |e| normalized(e.score, e.t, length_norm)) {
        return Ok(Selection {
            tokens: book.trace(e.t, e.j),
            score: e.score,
            normalized_score: normalized(e.score, e.t, length_norm),
            fallback_used: false,
        });
    }
    if let Some(e) = best(fallback, |e| normalized(e.score, e.t, length_norm)) {
        let mut tokens = book.trace(e.t - 1, e.prev_row);
        tokens.push(TokenId::EOS);
        return Ok(Selection {
            tokens,
            score: e.score,
            normalized_score: normalized(e.score, e.t, length_norm),
            fallback_used: true,
        });
    }
    Err(Error::DeadBeam { step: book.steps() })
}

/// Everything recorded while decoding one sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub book: BeamBookkeeping,
    pub finished: Vec<FinishedEntry>,
    pub fallback: Vec<FallbackEntry>,
}

/// One sentence's beam. The caller owns the model state; every step it
/// hands over the model scores for this beam's rows and gets back the
/// backpointers to gather the state with.
pub(crate) struct SentenceBeam<'a> {
    beam: usize,
    vocab: usize,
    max_steps: usize,
    /// λ, or `None` in pure model mode.
    lambda: Option<f64>,
    lmbr: Option<&'a LmbrMatrix>,
    prune_width: f64,
    length_norm: bool,
    mask: Option<&'a dyn ConstraintMask>,
    book: BeamBookkeeping,
    finished: Vec<FinishedEntry>,
    fallback: Vec<FallbackEntry>,
    done: bool,
    scorer_calls: usize,
    combined: Vec<f64>,
    history: Vec<TokenId>,
}

pub(crate) struct BeamSetup<'a> {
    pub beam: usize,
    pub vocab: usize,
    pub max_steps: usize,
    pub lambda: f64,
    pub lmbr: Option<&'a LmbrMatrix>,
    pub prune_width: f64,
    pub length_norm: bool,
    pub mask: Option<&'a dyn ConstraintMask>,
}

impl<'a> SentenceBeam<'a> {
    pub fn new(setup: BeamSetup<'a>) -> Result<Self> {
        if let Some(m) = setup.lmbr {
            if m.vocab_size() != setup.vocab {
                return Err(Error::Contract(format!(
                    "LMBR matrix covers {} tokens but the scorer has {}",
                    m.vocab_size(),
                    setup.vocab
                )));
            }
        }
        Ok(Self {
            beam: setup.beam,
            vocab: setup.vocab,
            max_steps: setup.max_steps,
            lambda: setup.lmbr.map(|_| setup.lambda),
            lmbr: setup.lmbr,
            prune_width: setup.prune_width,
            length_norm: setup.length_norm,
            mask: setup.mask,
            book: BeamBookkeeping::new(setup.beam),
            finished: Vec::new(),
            fallback: Vec::new(),
            done: false,
            scorer_calls: 0,
            combined: vec![0.0; setup.beam * setup.vocab],
            history: Vec::with_capacity(MAX_CONTEXT),
        })
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Tokens emitted at the last step, fed to the next model call.
    pub fn last_tokens(&self) -> &[TokenId] {
        self.book.y.last().expect("step 0 exists")
    }

    /// Runs one step on this beam's `B × V` model block. Returns the
    /// backpointers `b_t`.
    pub fn advance(&mut self, model: &[f64]) -> Result<Vec<usize>> {
        let (beam, v) = (self.beam, self.vocab);
        if model.len() != beam * v {
            return Err(Error::Contract(format!(
                "model block has {} values, expected {beam}x{v}",
                model.len()
            )));
        }
        debug_assert!(!self.done);
        self.scorer_calls += 1;
        let prev = self.book.steps();
        let t = prev + 1;

        for j in 0..beam {
            let qj = self.book.q[prev][j];
            let out = &mut self.combined[j * v..(j + 1) * v];
            let p = &model[j * v..(j + 1) * v];
            if qj == MASKED {
                out.fill(MASKED);
                continue;
            }
            match (self.lmbr, self.lambda) {
                (Some(m), Some(lambda)) => {
                    self.book.history(prev, j, &mut self.history);
                    let l = m.row_for(&self.history);
                    for ((o, &p), &l) in out.iter_mut().zip(p).zip(l) {
                        *o = (lambda * p + l) + qj;
                    }
                }
                _ => {
                    for (o, &p) in out.iter_mut().zip(p) {
                        *o = p + qj;
                    }
                }
            }
            // the start marker is never emitted
            out[TokenId::START.index()] = MASKED;
        }

        if let Some(mask) = self.mask {
            mask.apply(t, v, &mut self.combined);
        }

        let eos = TokenId::EOS.index();
        let mut best_eos: Option<FallbackEntry> = None;
        for j in 0..beam {
            let score = self.combined[j * v + eos];
            if score != MASKED && best_eos.map_or(true, |e| score > e.score) {
                best_eos = Some(FallbackEntry {
                    t,
                    prev_row: j,
                    score,
                });
            }
        }
        self.fallback.extend(best_eos);

        early_prune(&mut self.combined, self.prune_width);

        let top = top_b(&self.combined, v, beam);
        let (b, y, mut q) = (top.b, top.y, top.q);
        apply_eos_masking(t, &y, &mut q, &mut self.finished);

        let live = q.iter().any(|&x| x != MASKED);
        self.book.push(b.clone(), y, q);
        if !live || t >= self.max_steps {
            self.done = true;
        }
        Ok(b)
    }

    pub fn finish(self) -> Result<(DecodeResult, DecodeTrace)> {
        let sel = backtrace_best(&self.finished, &self.fallback, &self.book, self.length_norm)?;
        let result = DecodeResult {
            tokens: sel.tokens,
            score: sel.score,
            normalized_score: sel.normalized_score,
            stats: DecodeStats {
                steps_used: self.book.steps(),
                scorer_calls: self.scorer_calls,
                finished_count: self.finished.len(),
                fallback_used: sel.fallback_used,
            },
        };
        let trace = DecodeTrace {
            book: self.book,
            finished: self.finished,
            fallback: self.fallback,
        };
        Ok((result, trace))
    }
}
