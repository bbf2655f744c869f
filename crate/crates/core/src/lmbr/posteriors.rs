use std::collections::{BTreeMap, HashSet};

use crate::lmbr::{EvidenceSpace, MAX_ORDER};
use crate::vocab::TokenId;

/// Posterior probability of every n-gram (orders 1..=4) in an evidence space.
/// Absent n-grams have posterior zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NgramPosteriorTable {
    table: BTreeMap<Vec<TokenId>, f64>,
}

impl NgramPosteriorTable {
    pub fn get(&self, ngram: &[TokenId]) -> f64 {
        self.table.get(ngram).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Entries in lexicographic n-gram order.
    pub fn iter(&self) -> impl Iterator<Item = (&[TokenId], f64)> {
        self.table.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn add(&mut self, ngram: &[TokenId], mass: f64) {
        *self.table.entry(ngram.to_vec()).or_insert(0.0) += mass;
    }
}

impl FromIterator<(Vec<TokenId>, f64)> for NgramPosteriorTable {
    fn from_iter<I: IntoIterator<Item = (Vec<TokenId>, f64)>>(iter: I) -> Self {
        Self {
            table: iter.into_iter().collect(),
        }
    }
}

/// `tokens` with the start marker prepended.
pub fn start_padded(tokens: &[TokenId]) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(tokens.len() + 1);
    out.push(TokenId::START);
    out.extend_from_slice(tokens);
    out
}

/// `P(u) = Σ_h w(h) · [u occurs in <s> h]`. Each hypothesis contributes its
/// weight at most once per n-gram, however often the n-gram repeats in it.
pub fn compute_ngram_posteriors(evidence: &EvidenceSpace) -> NgramPosteriorTable {
    let mut out = NgramPosteriorTable::default();
    for hyp in evidence.hypotheses() {
        let padded = start_padded(&hyp.tokens);
        let mut present: HashSet<&[TokenId]> = HashSet::new();
        for n in 1..=MAX_ORDER {
            for w in padded.windows(n) {
                if present.insert(w) {
                    out.add(w, hyp.weight);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmbr::WeightDomain;

    fn t(ids: &[u32]) -> Vec<TokenId> {
        ids.iter().map(|&i| TokenId(i)).collect()
    }

    // a=2 b=3 c=4
    fn worked() -> EvidenceSpace {
        EvidenceSpace::new(
            vec![(t(&[2, 3, 1]), 0.6), (t(&[2, 4, 1]), 0.4)],
            WeightDomain::Linear,
        )
        .unwrap()
    }

    #[test]
    fn worked_example() {
        let p = compute_ngram_posteriors(&worked());
        assert_eq!(p.get(&t(&[2])), 1.0);
        assert_eq!(p.get(&t(&[3])), 0.6);
        assert_eq!(p.get(&t(&[2, 3])), 0.6);
        assert_eq!(p.get(&t(&[2, 4])), 0.4);
        assert_eq!(p.get(&t(&[1])), 1.0);
        assert_eq!(p.get(&t(&[0, 2, 3])), 0.6);
        assert_eq!(p.get(&t(&[0, 2, 3, 1])), 0.6);
        assert_eq!(p.get(&t(&[3, 4])), 0.0);
    }

    #[test]
    fn repeated_ngram_counts_once() {
        let e = EvidenceSpace::new(vec![(t(&[2, 2, 1]), 1.0)], WeightDomain::Linear).unwrap();
        let p = compute_ngram_posteriors(&e);
        assert_eq!(p.get(&t(&[2])), 1.0);
        assert!(p.iter().all(|(_, v)| v == 1.0));
    }
}
