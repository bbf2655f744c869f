use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::Result;
use crate::lmbr::{start_padded, EvidenceSpace, NgramPosteriorTable, MAX_CONTEXT, MAX_ORDER};
use crate::scorer::check_tokens;
use crate::vocab::TokenId;

/// Θ₀ (constant) and Θ₁..Θ₄ (posterior weights per n-gram order).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmbrParams {
    pub theta: [f64; 5],
}

impl LmbrParams {
    pub fn new(theta: [f64; 5]) -> Self {
        Self { theta }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    /// Distinct histories of length 0..=3 preceding a token in the evidence.
    pub distinct_contexts: usize,
    /// Cells written by the sparse pass.
    pub sparse_updates: usize,
    pub nonzero_posteriors: usize,
}

/// History-keyed LMBR scores.
///
/// For a history `c` and token `y` the entry is
/// `Θ₀ + Σ_{n=1..4} Θ_n · P(suffix_{n-1}(c) · y)`, where terms whose suffix
/// would be longer than `c` are zero. Rows exist for every non-empty history
/// of length up to three seen in the start-padded evidence; the empty
/// history is the default row, which also serves histories that share no
/// suffix with the evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct LmbrMatrix {
    vocab_size: usize,
    contexts: Vec<Vec<TokenId>>,
    history_index: HashMap<Vec<TokenId>, usize>,
    rows: Vec<f64>,
    default_row: Vec<f64>,
    stats: BuildStats,
}

/// Builds the matrix: all `Θ_n · P` terms are scattered into a zeroed
/// matrix first, touching only n-grams with non-zero posterior, and Θ₀ is
/// added to every cell in a single dense pass afterwards.
pub fn build_lmbr_matrix(
    posteriors: &NgramPosteriorTable,
    evidence: &EvidenceSpace,
    vocab_size: usize,
    params: &LmbrParams,
) -> Result<LmbrMatrix> {
    evidence.check_vocab(vocab_size)?;
    for (ngram, _) in posteriors.iter() {
        check_tokens(ngram, vocab_size)?;
    }

    let mut all_contexts: BTreeSet<Vec<TokenId>> = BTreeSet::new();
    for hyp in evidence.hypotheses() {
        let padded = start_padded(&hyp.tokens);
        for i in 1..padded.len() {
            for k in 0..=MAX_CONTEXT.min(i) {
                all_contexts.insert(padded[i - k..i].to_vec());
            }
        }
    }
    let distinct_contexts = all_contexts.len();
    let contexts: Vec<Vec<TokenId>> = all_contexts.into_iter().filter(|c| !c.is_empty()).collect();
    let history_index: HashMap<Vec<TokenId>, usize> = contexts
        .iter()
        .enumerate()
        .map(|(r, c)| (c.clone(), r))
        .collect();

    // rows whose history ends with a given suffix
    let mut by_suffix: HashMap<&[TokenId], Vec<usize>> = HashMap::new();
    for (r, c) in contexts.iter().enumerate() {
        for s in 1..=c.len() {
            by_suffix.entry(&c[c.len() - s..]).or_default().push(r);
        }
    }

    let v = vocab_size;
    let theta = params.theta;
    let mut rows = vec![0.0; contexts.len() * v];
    let mut default_row = vec![0.0; v];
    let mut stats = BuildStats {
        distinct_contexts,
        ..Default::default()
    };

    // one order at a time, so every cell sums its terms in order 1, 2, 3, 4
    for n in 1..=MAX_ORDER {
        for (ngram, p) in posteriors.iter().filter(|(g, _)| g.len() == n) {
            if p == 0.0 {
                continue;
            }
            stats.nonzero_posteriors += 1;
            let y = ngram[n - 1].index();
            let term = theta[n] * p;
            if n == 1 {
                default_row[y] += term;
                for r in 0..contexts.len() {
                    rows[r * v + y] += term;
                }
                stats.sparse_updates += contexts.len() + 1;
            } else if let Some(targets) = by_suffix.get(&ngram[..n - 1]) {
                for &r in targets {
                    rows[r * v + y] += term;
                }
                stats.sparse_updates += targets.len();
            }
        }
    }

    for x in rows.iter_mut().chain(default_row.iter_mut()) {
        *x += theta[0];
    }

    Ok(LmbrMatrix {
        vocab_size,
        contexts,
        history_index,
        rows,
        default_row,
        stats,
    })
}

impl LmbrMatrix {
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of history rows, excluding the default row.
    pub fn num_rows(&self) -> usize {
        self.contexts.len()
    }

    /// All stored rows including the default row.
    pub fn rows_built(&self) -> usize {
        self.contexts.len() + 1
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn contexts(&self) -> &[Vec<TokenId>] {
        &self.contexts
    }

    pub fn row_index(&self, context: &[TokenId]) -> Option<usize> {
        self.history_index.get(context).copied()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.vocab_size..(r + 1) * self.vocab_size]
    }

    pub fn default_row(&self) -> &[f64] {
        &self.default_row
    }

    /// Row for `history`: the exact row if present, else the row of its
    /// longest stored suffix, else the default row. Only the last three
    /// tokens of `history` matter.
    pub fn row_for(&self, history: &[TokenId]) -> &[f64] {
        let h = &history[history.len().saturating_sub(MAX_CONTEXT)..];
        (1..=h.len())
            .rev()
            .find_map(|s| self.row_index(&h[h.len() - s..]))
            .map_or(&self.default_row[..], |r| self.row(r))
    }

    /// Fetches one row per history into a `B × V` block.
    pub fn lookup_history_rows(&self, histories: &[&[TokenId]]) -> Vec<f64> {
        let mut out = Vec::with_capacity(histories.len() * self.vocab_size);
        for h in histories {
            out.extend_from_slice(self.row_for(h));
        }
        out
    }
}
