//! Add-one smoothed n-gram language model used as a stand-in for the
//! neural model in tests and benchmarks.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scorer::{
    check_source, check_step, BatchState, ScoreBlock, Scorer, SourceContext, StateRow,
};
use crate::vocab::{TokenId, Vocabulary};

/// Raw n-gram counts. Keys may have any length >= 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NgramCounts {
    counts: HashMap<Vec<TokenId>, u64>,
}

impl NgramCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` occurrences of `ngram`.
    pub fn add(&mut self, ngram: &[TokenId], count: u64) {
        assert!(!ngram.is_empty(), "empty n-gram");
        *self.counts.entry(ngram.to_vec()).or_default() += count;
    }

    pub fn get(&self, ngram: &[TokenId]) -> u64 {
        self.counts.get(ngram).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Longest n-gram length present, or 1 for an empty table.
    pub fn max_order(&self) -> usize {
        self.counts.keys().map(Vec::len).max().unwrap_or(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[TokenId], u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Parses `count<TAB>space-separated tokens` lines. Repeated n-grams add up.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Result<Self> {
        let mut out = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (count, toks) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("counts line {}: expected count<TAB>tokens", lineno + 1))
            })?;
            let count: u64 = count.trim().parse().map_err(|_| {
                Error::Format(format!("counts line {}: bad count {count:?}", lineno + 1))
            })?;
            let words: Vec<&str> = toks.split_whitespace().collect();
            if words.is_empty() {
                return Err(Error::Format(format!("counts line {}: no tokens", lineno + 1)));
            }
            out.add(&vocab.encode(&words)?, count);
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, vocab)
    }

    /// Serializes in the counts file format, sorted for stable output.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let mut entries: Vec<_> = self.counts.iter().collect();
        entries.sort();
        let mut out = String::new();
        for (ngram, count) in entries {
            let words = vocab.decode(ngram).expect("counts use vocabulary ids");
            out.push_str(&format!("{count}\t{}\n", words.join(" ")));
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
struct Continuations {
    total: u64,
    next: Vec<(TokenId, u64)>,
}

/// `P(y | h) = (c(h y) + 1) / (c(h ·) + V)` over the last `order - 1`
/// emitted tokens. The start marker counts as an emitted token, so early
/// histories are shorter than `order - 1`.
///
/// State rows hold the history token ids.
#[derive(Clone, Debug)]
pub struct NgramScorer {
    order: usize,
    vocab_size: usize,
    table: HashMap<Vec<TokenId>, Continuations>,
}

/// Builds an order-`order` scorer over `vocab`.
pub fn build_ngram_scorer(
    counts: &NgramCounts,
    order: usize,
    vocab: &Vocabulary,
) -> Result<NgramScorer> {
    NgramScorer::new(counts, order, vocab.len())
}

impl NgramScorer {
    pub fn new(counts: &NgramCounts, order: usize, vocab_size: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("n-gram order must be >= 1".into()));
        }
        if vocab_size == 0 {
            return Err(Error::Config("vocabulary size must be >= 1".into()));
        }
        let mut table: HashMap<Vec<TokenId>, Continuations> = HashMap::new();
        for (ngram, count) in counts.iter() {
            if let Some(&token) = ngram.iter().find(|t| t.index() >= vocab_size) {
                return Err(Error::Range { token, vocab_size });
            }
            if ngram.len() > order || count == 0 {
                continue;
            }
            let (hist, last) = ngram.split_at(ngram.len() - 1);
            let entry = table.entry(hist.to_vec()).or_default();
            entry.total += count;
            entry.next.push((last[0], count));
        }
        for c in table.values_mut() {
            c.next.sort_unstable();
        }
        Ok(Self {
            order,
            vocab_size,
            table,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Writes `ln P(· | history)` into `out`.
    pub fn fill_row(&self, history: &[TokenId], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.vocab_size);
        let v = self.vocab_size as f64;
        match self.table.get(history) {
            None => out.fill(-v.ln()),
            Some(c) => {
                let denom = c.total as f64 + v;
                out.fill(-denom.ln());
                for &(y, n) in &c.next {
                    out[y.index()] = ((n as f64 + 1.0) / denom).ln();
                }
            }
        }
    }

    fn extend(&self, row: &StateRow, token: TokenId) -> StateRow {
        let keep = self.order - 1;
        let mut hist = Vec::with_capacity(keep + 1);
        hist.extend_from_slice(&row.0);
        hist.push(token.0);
        let cut = hist.len().saturating_sub(keep);
        hist.drain(..cut);
        StateRow(hist)
    }
}

fn as_tokens(row: &StateRow) -> Vec<TokenId> {
    row.0.iter().map(|&t| TokenId(t)).collect()
}

impl Scorer for NgramScorer {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn init_source(&self, source: &[TokenId]) -> Result<(SourceContext, BatchState)> {
        check_source(source, self.vocab_size)?;
        Ok((
            SourceContext::new(source),
            BatchState::new(vec![StateRow::default()]),
        ))
    }

    fn step(
        &self,
        prev: &BatchState,
        prev_tokens: &[TokenId],
        contexts: &[&SourceContext],
    ) -> Result<(ScoreBlock, BatchState)> {
        check_step(prev, prev_tokens, contexts, self.vocab_size)?;
        let v = self.vocab_size;
        let mut values = vec![0.0; prev.len() * v];
        // rows sharing a history share one distribution
        let mut seen: HashMap<&StateRow, usize> = HashMap::new();
        let rows: Vec<StateRow> = prev
            .rows()
            .iter()
            .zip(prev_tokens)
            .map(|(row, &tok)| self.extend(row, tok))
            .collect();
        for (j, row) in rows.iter().enumerate() {
            match seen.get(row) {
                Some(&first) => values.copy_within(first * v..(first + 1) * v, j * v),
                None => {
                    self.fill_row(&as_tokens(row), &mut values[j * v..(j + 1) * v]);
                    seen.insert(row, j);
                }
            }
        }
        drop(seen);
        Ok((ScoreBlock::new(prev.len(), v, values)?, BatchState::new(rows)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::parse("<s>\n</s>\na\nb\nc").unwrap()
    }

    fn ab_ac(v: &Vocabulary) -> NgramCounts {
        NgramCounts::parse("2\ta b\n1\ta c\n", v).unwrap()
    }

    #[test]
    fn add_one_smoothing_matches_hand_arithmetic() {
        let v = vocab();
        let s = build_ngram_scorer(&ab_ac(&v), 2, &v).unwrap();
        let (ctx, _) = s.init_source(&[TokenId(2)]).unwrap();
        let prev = BatchState::new(vec![StateRow::default()]);
        let (block, next) = s.step(&prev, &[TokenId(2)], &[&ctx]).unwrap();
        let row = block.row(0);
        assert!((row[3] - (3.0f64 / 8.0).ln()).abs() < 1e-12);
        assert!((row[4] - (2.0f64 / 8.0).ln()).abs() < 1e-12);
        assert!((row[1] - (1.0f64 / 8.0).ln()).abs() < 1e-12);
        assert_eq!(next.rows()[0], StateRow(vec![2]));
    }

    #[test]
    fn empty_counts_give_uniform_rows() {
        let v = vocab();
        let s = build_ngram_scorer(&NgramCounts::new(), 3, &v).unwrap();
        let (ctx, s0) = s.init_source(&[TokenId(2), TokenId(3)]).unwrap();
        let (block, _) = s.step(&s0, &[TokenId::START], &[&ctx]).unwrap();
        for &x in block.row(0) {
            assert!((x - (0.2f64).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn history_keeps_last_order_minus_one_tokens() {
        let v = vocab();
        let s = build_ngram_scorer(&ab_ac(&v), 3, &v).unwrap();
        let row = s.extend(&StateRow(vec![0, 2]), TokenId(3));
        assert_eq!(row, StateRow(vec![2, 3]));
        let s1 = build_ngram_scorer(&ab_ac(&v), 1, &v).unwrap();
        assert_eq!(s1.extend(&StateRow(vec![]), TokenId(3)), StateRow(vec![]));
    }

    #[test]
    fn duplicated_rows_give_duplicated_scores() {
        let v = vocab();
        let s = build_ngram_scorer(&ab_ac(&v), 2, &v).unwrap();
        let (ctx, _) = s.init_source(&[TokenId(2)]).unwrap();
        let prev = BatchState::new(vec![StateRow(vec![]); 3]);
        let (block, next) = s
            .step(&prev, &[TokenId(2), TokenId(3), TokenId(2)], &[&ctx])
            .unwrap();
        assert_eq!(block.row(0), block.row(2));
        assert_ne!(block.row(0), block.row(1));
        assert_eq!(next.rows()[0], next.rows()[2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let v = vocab();
        let s = build_ngram_scorer(&ab_ac(&v), 2, &v).unwrap();
        assert!(matches!(
            s.init_source(&[TokenId(9)]),
            Err(Error::Range { .. })
        ));
        assert!(s.init_source(&[]).is_err());
        let (ctx, s0) = s.init_source(&[TokenId(2)]).unwrap();
        assert!(matches!(
            s.step(&s0, &[TokenId(2), TokenId(2)], &[&ctx]),
            Err(Error::Contract(_))
        ));
        assert!(NgramCounts::parse("x\ta b", &v).is_err());
        assert!(NgramCounts::parse("1\ta z", &v).is_err());
        assert!(NgramCounts::parse("1 a b", &v).is_err());
    }

    #[test]
    fn counts_text_round_trip() {
        let v = vocab();
        let c = NgramCounts::parse("2\ta b\n1\ta c\n3\t<s> a\n1\ta c\n", &v).unwrap();
        assert_eq!(c.get(&[TokenId(2), TokenId(4)]), 2);
        assert_eq!(NgramCounts::parse(&c.to_text(&v), &v).unwrap(), c);
        assert_eq!(c.max_order(), 2);
    }
}
