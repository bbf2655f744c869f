//! Decode one sentence with an n-gram model and its n-best evidence.
//!
//! ```text
//! cargo run --example decode_sentence [-- LINE]
//! ```

use std::path::Path;

use lmbr_beam::lmbr::{read_evidence_file, WeightDomain};
use lmbr_beam::scorer::{NgramCounts, NgramScorer};
use lmbr_beam::{build_lmbr_matrix, compute_ngram_posteriors, decode, DecoderConfig, LmbrParams, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let line: usize = std::env::args().nth(1).map_or(0, |s| s.parse().expect("line number"));

    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let counts = NgramCounts::load(dir.join("counts.tsv"), &vocab)?;
    let scorer = NgramScorer::new(&counts, counts.max_order(), vocab.len())?;
    let cfg = DecoderConfig::load(dir.join("config.json"))?;

    let corpus = std::fs::read_to_string(dir.join("corpus.txt")).expect("corpus");
    let text = corpus.lines().nth(line).expect("line in range");
    let source = vocab.encode(&text.split_whitespace().collect::<Vec<_>>())?;
    let (_, evidence) = read_evidence_file(dir.join("evidence.jsonl"), &vocab, WeightDomain::Linear)?
        .into_iter()
        .nth(line)
        .expect("evidence for line");

    let posteriors = compute_ngram_posteriors(&evidence);
    let matrix = build_lmbr_matrix(&posteriors, &evidence, vocab.len(), &LmbrParams::new(cfg.theta))?;
    let result = decode(&source, &scorer, Some(&matrix), &cfg, None)?;

    println!("source:   {text}");
    for h in evidence.hypotheses().iter().take(3) {
        println!("evidence: {:.3}  {}", h.weight, vocab.detokenize(&h.tokens));
    }
    println!("output:   {}", vocab.detokenize(&result.tokens));
    println!("score {:.4} after {} steps, {} rows in L", result.score, result.stats.steps_used, matrix.rows_built());
    Ok(())
}
