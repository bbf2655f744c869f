#![allow(dead_code)]

use std::path::PathBuf;

use lmbr_beam::lmbr::{read_evidence_file, EvidenceSpace, WeightDomain};
use lmbr_beam::oracle::{bruteforce_posteriors, score_hypothesis_eq2, Eq2Terms};
use lmbr_beam::scorer::{NgramCounts, NgramScorer};
use lmbr_beam::{DecodeResult, DecoderConfig, Scorer, TokenId, Vocabulary};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub struct Toy {
    pub vocab: Vocabulary,
    pub scorer: NgramScorer,
    pub corpus: Vec<Vec<TokenId>>,
    pub evidence: Vec<EvidenceSpace>,
    pub config: DecoderConfig,
}

/// The bundled 100-sentence n-gram corpus.
pub fn toy() -> Toy {
    let vocab = Vocabulary::load(data("toy/vocab.txt")).unwrap();
    let counts = NgramCounts::load(data("toy/counts.tsv"), &vocab).unwrap();
    let scorer = NgramScorer::new(&counts, counts.max_order(), vocab.len()).unwrap();
    let corpus = std::fs::read_to_string(data("toy/corpus.txt"))
        .unwrap()
        .lines()
        .map(|l| vocab.encode(&l.split_whitespace().collect::<Vec<_>>()).unwrap())
        .collect::<Vec<_>>();
    let evidence: Vec<EvidenceSpace> =
        read_evidence_file(data("toy/evidence.jsonl"), &vocab, WeightDomain::Linear)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, (id, e))| {
                assert_eq!(id, i as u64);
                e
            })
            .collect();
    assert_eq!(evidence.len(), corpus.len());
    let config = DecoderConfig::load(data("toy/config.json")).unwrap();
    Toy {
        vocab,
        scorer,
        corpus,
        evidence,
        config,
    }
}

/// Recomputes a result's score term by term, independently of the decoder.
/// `lmbr` is the evidence, Θ and λ the decoder ran with, or `None` for a
/// pure model decode.
pub fn rescore<S: Scorer + ?Sized>(
    source: &[TokenId],
    r: &DecodeResult,
    scorer: &S,
    lmbr: Option<(&EvidenceSpace, [f64; 5], f64)>,
) -> f64 {
    let posteriors = lmbr.map(|(e, _, _)| bruteforce_posteriors(e));
    let terms = lmbr.zip(posteriors.as_ref()).map(|((_, theta, lambda), p)| Eq2Terms {
        posteriors: p,
        theta,
        lambda,
    });
    score_hypothesis_eq2(source, &r.tokens, scorer, terms.as_ref()).unwrap()
}

/// Counts rescoring checks and remembers the worst deviation.
#[derive(Default)]
pub struct Consistency {
    pub checked: usize,
    pub failures: usize,
    pub worst: f64,
}

impl Consistency {
    pub fn check<S: Scorer + ?Sized>(
        &mut self,
        source: &[TokenId],
        r: &DecodeResult,
        scorer: &S,
        lmbr: Option<(&EvidenceSpace, [f64; 5], f64)>,
    ) -> bool {
        let d = (rescore(source, r, scorer, lmbr) - r.score).abs();
        self.checked += 1;
        self.worst = self.worst.max(d);
        let ok = d <= 1e-9;
        if !ok {
            self.failures += 1;
        }
        ok
    }
}
