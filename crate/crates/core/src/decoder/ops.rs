//! Matrix primitives of one decoding step.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::config::DecoderConfig;
use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// Score of a masked candidate. Masked candidates are never extended.
pub const MASKED: f64 = f64::NEG_INFINITY;

/// `T = ceil(slope · source_length + offset)`, at least 1.
pub fn max_steps(source_length: usize, cfg: &DecoderConfig) -> usize {
    let t = (cfg.max_steps_slope * source_length as f64 + cfg.max_steps_offset).ceil();
    (t as usize).max(1)
}

/// Best `k` cells of a row-major matrix: backpointer rows `b`, tokens `y`
/// and scores `q`, with `q` non-increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopB {
    pub b: Vec<usize>,
    pub y: Vec<TokenId>,
    pub q: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    value: f64,
    index: usize,
}

// Greater is better: higher value, then smaller flattened index.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

/// Selects the `k` largest cells of the flattened `rows × vocab` matrix.
/// Ties go to the smaller flattened index `row · vocab + column`.
pub fn top_b(combined: &[f64], vocab: usize, k: usize) -> TopB {
    assert!(vocab > 0 && combined.len() % vocab == 0, "matrix shape");
    assert!(k <= combined.len(), "cannot select {k} of {} cells", combined.len());
    let mut heap: BinaryHeap<Reverse<Cell>> = BinaryHeap::with_capacity(k + 1);
    for (index, &value) in combined.iter().enumerate() {
        let cell = Cell { value, index };
        if heap.len() < k {
            heap.push(Reverse(cell));
        } else if let Some(Reverse(worst)) = heap.peek() {
            if cell > *worst {
                heap.pop();
                heap.push(Reverse(cell));
            }
        }
    }
    // ascending order of Reverse = best first
    let best = heap.into_sorted_vec();
    let mut out = TopB {
        b: Vec::with_capacity(k),
        y: Vec::with_capacity(k),
        q: Vec::with_capacity(k),
    };
    for Reverse(c) in best {
        out.b.push(c.index / vocab);
        out.y.push(TokenId((c.index % vocab) as u32));
        out.q.push(c.value);
    }
    out
}

/// New rows where row `j` is a copy of `rows[idx[j]]`.
pub fn gather_rows<T: Clone>(rows: &[T], idx: &[usize]) -> Result<Vec<T>> {
    idx.iter()
        .map(|&i| {
            rows.get(i).cloned().ok_or_else(|| {
                Error::Contract(format!("row index {i} out of range for {} rows", rows.len()))
            })
        })
        .collect()
}

/// Row gather over a flat row-major matrix with `cols` columns.
pub fn gather_matrix_rows(values: &[f64], cols: usize, idx: &[usize]) -> Result<Vec<f64>> {
    let rows = values.len() / cols.max(1);
    let mut out = Vec::with_capacity(idx.len() * cols);
    for &i in idx {
        if i >= rows {
            return Err(Error::Contract(format!(
                "row index {i} out of range for {rows} rows"
            )));
        }
        out.extend_from_slice(&values[i * cols..(i + 1) * cols]);
    }
    Ok(out)
}

/// A hypothesis that emitted EOS at step `t` in beam row `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinishedEntry {
    pub t: usize,
    pub j: usize,
    pub score: f64,
}

/// Moves EOS candidates of step `t` into `finished` and masks their scores.
/// Candidates that are already masked are not recorded.
pub fn apply_eos_masking(
    t: usize,
    y: &[TokenId],
    q: &mut [f64],
    finished: &mut Vec<FinishedEntry>,
) {
    for (j, (tok, score)) in y.iter().zip(q.iter_mut()).enumerate() {
        if tok.is_eos() && *score != MASKED {
            finished.push(FinishedEntry {
                t,
                j,
                score: *score,
            });
            *score = MASKED;
        }
    }
}

/// Masks every cell whose probability ratio to the best cell is below
/// `width`, i.e. cells below `max + ln(width)`. A width of 0 disables it.
pub fn early_prune(combined: &mut [f64], width: f64) {
    if width <= 0.0 {
        return;
    }
    let best = combined.iter().copied().fold(MASKED, f64::max);
    if best == MASKED {
        return;
    }
    let threshold = best + width.ln();
    for x in combined.iter_mut() {
        if *x < threshold {
            *x = MASKED;
        }
    }
}

/// User constraint over candidate extensions.
pub trait ConstraintMask: Sync {
    /// True when `token` may not extend beam row `row` at 1-based `step`.
    fn forbids(&self, step: usize, row: usize, token: TokenId) -> bool;

    /// Masks forbidden cells of a `rows × vocab` block.
    fn apply(&self, step: usize, vocab: usize, combined: &mut [f64]) {
        for (row, cells) in combined.chunks_mut(vocab).enumerate() {
            for (y, x) in cells.iter_mut().enumerate() {
                if self.forbids(step, row, TokenId(y as u32)) {
                    *x = MASKED;
                }
            }
        }
    }
}

impl<F> ConstraintMask for F
where
    F: Fn(usize, usize, TokenId) -> bool + Sync,
{
    fn forbids(&self, step: usize, row: usize, token: TokenId) -> bool {
        self(step, row, token)
    }
}

/// Forbids a fixed set of tokens everywhere.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenBlacklist {
    tokens: HashSet<TokenId>,
}

impl TokenBlacklist {
    pub fn new(tokens: impl IntoIterator<Item = TokenId>) -> Self {
        Self {
            tokens: tokens.into_iter().collect(),
        }
    }

    pub fn contains(&self, token: TokenId) -> bool {
        self.tokens.contains(&token)
    }
}

impl ConstraintMask for TokenBlacklist {
    fn forbids(&self, _step: usize, _row: usize, token: TokenId) -> bool {
        self.tokens.contains(&token)
    }

    fn apply(&self, _step: usize, vocab: usize, combined: &mut [f64]) {
        for cells in combined.chunks_mut(vocab) {
            for t in &self.tokens {
                if let Some(x) = cells.get_mut(t.index()) {
                    *x = MASKED;
                }
            }
        }
    }
}

/// Masks the cells `mask` forbids at `step`.
pub fn apply_constraint_mask(
    combined: &mut [f64],
    vocab: usize,
    step: usize,
    mask: &dyn ConstraintMask,
) {
    mask.apply(step, vocab, combined);
}
