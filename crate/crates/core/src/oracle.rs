//! Brute-force references for the decoder and the posterior computation.
//!
//! Nothing here goes through the LMBR matrix or the beam machinery: scores
//! are evaluated term by term from the posterior table and the model, and
//! posteriors are found by scanning every hypothesis for every n-gram.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::DecoderConfig;
use crate::decoder::max_steps;
use crate::error::{Error, Result};
use crate::lmbr::{EvidenceSpace, NgramPosteriorTable};
use crate::scorer::{BatchState, Scorer};
use crate::vocab::TokenId;

const ORDERS: usize = 4;

/// Limits on what [`exhaustive_decode`] agrees to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_vocab: usize,
    pub max_steps: usize,
    /// Ceiling on `V^T`.
    pub ceiling: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_vocab: 64,
            max_steps: 16,
            ceiling: 1_000_000,
        }
    }
}

/// LMBR part of the objective: posteriors, Θ₀..Θ₄ and the model weight λ.
#[derive(Clone, Copy, Debug)]
pub struct Eq2Terms<'a> {
    pub posteriors: &'a NgramPosteriorTable,
    pub theta: [f64; 5],
    pub lambda: f64,
}

fn contains(haystack: &[TokenId], needle: &[TokenId]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Sums, for every n-gram of order 1..=4 in the start-padded evidence, the
/// weights of the hypotheses that contain it.
pub fn bruteforce_posteriors(evidence: &EvidenceSpace) -> NgramPosteriorTable {
    let padded: Vec<Vec<TokenId>> = evidence
        .hypotheses()
        .iter()
        .map(|h| std::iter::once(TokenId::START).chain(h.tokens.iter().copied()).collect())
        .collect();
    let mut universe: BTreeSet<Vec<TokenId>> = BTreeSet::new();
    for p in &padded {
        for n in 1..=ORDERS {
            for w in p.windows(n) {
                universe.insert(w.to_vec());
            }
        }
    }
    universe
        .into_iter()
        .map(|u| {
            let mut mass = 0.0;
            for (p, h) in padded.iter().zip(evidence.hypotheses()) {
                if contains(p, &u) {
                    mass += h.weight;
                }
            }
            (u, mass)
        })
        .collect()
}

/// `Θ₀ + Σ_n Θ_n P(last n-1 tokens of history · y)`, skipping orders whose
/// history would be longer than `history`.
fn lmbr_term(history: &[TokenId], y: TokenId, terms: &Eq2Terms<'_>) -> f64 {
    let mut total = terms.theta[0];
    let mut ngram = Vec::with_capacity(ORDERS);
    for n in 1..=ORDERS {
        if n - 1 > history.len() {
            break;
        }
        ngram.clear();
        ngram.extend_from_slice(&history[history.len() - (n - 1)..]);
        ngram.push(y);
        total += terms.theta[n] * terms.posteriors.get(&ngram);
    }
    total
}

/// Objective value of `tokens` (which must end in EOS): the sum over
/// positions of `L(history, y) + λ log P(y | prefix)`, or of the model
/// log-probability alone when `lmbr` is `None`.
pub fn score_hypothesis_eq2<S: Scorer + ?Sized>(
    source: &[TokenId],
    tokens: &[TokenId],
    scorer: &S,
    lmbr: Option<&Eq2Terms<'_>>,
) -> Result<f64> {
    if tokens.last() != Some(&TokenId::EOS) {
        return Err(Error::Contract("hypothesis must end with EOS".into()));
    }
    crate::scorer::check_tokens(tokens, scorer.vocab_size())?;
    let (ctx, mut state) = scorer.init_source(source)?;
    let mut history = vec![TokenId::START];
    let mut prev = TokenId::START;
    let mut total = 0.0;
    for &y in tokens {
        let (block, next) = scorer.step(&state, &[prev], &[&ctx])?;
        let logp = block.row(0)[y.index()];
        let term = match lmbr {
            Some(terms) => {
                let h = &history[history.len().saturating_sub(ORDERS - 1)..];
                terms.lambda * logp + lmbr_term(h, y, terms)
            }
            None => logp,
        };
        total += term;
        state = BatchState::new(next.rows().to_vec());
        history.push(y);
        prev = y;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub normalized_score: f64,
}

/// Exact argmax over every EOS-terminated sequence of length `1..=T`
/// (no start markers, EOS only at the end). Ties go to the
/// lexicographically smallest sequence.
pub fn exhaustive_decode<S: Scorer + ?Sized>(
    source: &[TokenId],
    scorer: &S,
    evidence: Option<&EvidenceSpace>,
    cfg: &DecoderConfig,
    budget: &OracleBudget,
) -> Result<OracleResult> {
    let v = scorer.vocab_size();
    let t_max = max_steps(source.len(), cfg);
    let space = (v as u128).checked_pow(t_max as u32).unwrap_or(u128::MAX);
    if v > budget.max_vocab || t_max > budget.max_steps || space > budget.ceiling {
        return Err(Error::Budget {
            sequences: space,
            ceiling: budget.ceiling,
        });
    }

    let posteriors = evidence.map(bruteforce_posteriors);
    let terms = posteriors.as_ref().map(|p| Eq2Terms {
        posteriors: p,
        theta: cfg.theta,
        lambda: cfg.lambda.resolve(scorer.members()),
    });

    let words: Vec<TokenId> = (2..v as u32).map(TokenId).collect();
    let mut best: Option<OracleResult> = None;
    let mut prefix: Vec<TokenId> = Vec::new();
    for len in 0..t_max {
        let combos = words.len().checked_pow(len as u32).unwrap_or(0);
        for idx in 0..combos {
            prefix.clear();
            let mut rest = idx;
            let mut div = combos;
            for _ in 0..len {
                div /= words.len();
                prefix.push(words[rest / div]);
                rest %= div;
            }
            prefix.push(TokenId::EOS);
            let score = score_hypothesis_eq2(source, &prefix, scorer, terms.as_ref())?;
            let norm = if cfg.length_norm {
                score / prefix.len() as f64
            } else {
                score
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    norm > b.normalized_score
                        || (norm == b.normalized_score && prefix < b.tokens)
                }
            };
            if better {
                best = Some(OracleResult {
                    tokens: prefix.clone(),
                    score,
                    normalized_score: norm,
                });
            }
        }
    }
    best.ok_or_else(|| Error::Contract("empty hypothesis space".into()))
}
