//! Side by side: the plain model decoder and the LMBR objective.

use std::path::Path;

use lmbr_beam::lmbr::{read_evidence_file, WeightDomain};
use lmbr_beam::scorer::{NgramCounts, NgramScorer};
use lmbr_beam::{build_lmbr_matrix, compute_ngram_posteriors, decode, DecoderConfig, LmbrParams, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let counts = NgramCounts::load(dir.join("counts.tsv"), &vocab)?;
    let scorer = NgramScorer::new(&counts, counts.max_order(), vocab.len())?;
    let cfg = DecoderConfig::load(dir.join("config.json"))?;
    let evidence = read_evidence_file(dir.join("evidence.jsonl"), &vocab, WeightDomain::Linear)?;
    let corpus = std::fs::read_to_string(dir.join("corpus.txt")).expect("corpus");

    for (text, (_, ev)) in corpus.lines().zip(&evidence).take(8) {
        let src = vocab.encode(&text.split_whitespace().collect::<Vec<_>>())?;
        let m = build_lmbr_matrix(&compute_ngram_posteriors(ev), ev, vocab.len(), &LmbrParams::new(cfg.theta))?;
        let pure = decode(&src, &scorer, None, &cfg, None)?;
        let lmbr = decode(&src, &scorer, Some(&m), &cfg, None)?;
        println!("pure: {}", vocab.detokenize(&pure.tokens));
        println!("lmbr: {}", vocab.detokenize(&lmbr.tokens));
        println!("1best evidence: {}\n", vocab.detokenize(&best(ev)));
    }
    Ok(())
}

fn best(ev: &lmbr_beam::EvidenceSpace) -> Vec<lmbr_beam::TokenId> {
    ev.hypotheses()
        .iter()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .map(|h| h.tokens.clone())
        .unwrap_or_default()
}
