//! Regenerates the bundled files under `data/`.
//!
//! ```text
//! cargo run --example generate_fixtures [-- OUT_DIR]
//! ```
//!
//! The recorded-scorer golden output comes from exhaustive search, not from
//! the decoder.

use std::path::{Path, PathBuf};

use lmbr_beam::lmbr::{EvidenceRecord, EvidenceSpace, WeightDomain};
use lmbr_beam::oracle::{exhaustive_decode, OracleBudget};
use lmbr_beam::synthetic::{random_recorded, rng, Workload, WorkloadSpec};
use lmbr_beam::{DecoderConfig, Lambda, TokenId, Vocabulary};
use rand::Rng;

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn jsonl(records: &[EvidenceRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect()
}

fn toy(dir: &Path) {
    let w = Workload::generate(&WorkloadSpec::default()).unwrap();
    w.write_files(dir).unwrap();
    // negative Θ₀ acts as a per-word penalty
    let cfg = DecoderConfig {
        theta: [-0.5, 0.6, 0.6, 0.4, 0.3],
        ..DecoderConfig::default()
    };
    write(&dir.join("config.json"), &(serde_json::to_string_pretty(&cfg).unwrap() + "\n"));
}

fn sample_200(dir: &Path) {
    // first seed whose confusion network has 200 distinct paths
    let w = (200..)
        .map(|seed| {
            Workload::generate(&WorkloadSpec {
                seed,
                sentences: 1,
                min_len: 20,
                max_len: 20,
                nbest: 200,
                ..WorkloadSpec::default()
            })
            .unwrap()
        })
        .find(|w| w.evidence[0].len() == 200)
        .unwrap();
    write(&dir.join("sample_200.jsonl"), &jsonl(&w.evidence_records()));
}

fn recorded(dir: &Path) {
    let vocab = Vocabulary::new(["<s>", "</s>", "a", "b", "c"]).unwrap();
    let mut r = rng(5);
    let scorer = random_recorded(&mut r, vocab.len(), 4);
    let cfg = DecoderConfig {
        beam_size: 625,
        lambda: Lambda::Fixed(0.5),
        theta: [-0.2, 0.5, 0.4, 0.3, 0.2],
        max_steps_slope: 1.0,
        max_steps_offset: 3.0,
        ..DecoderConfig::default()
    };
    let corpus = ["a", "b", "c"];
    let mut records = Vec::new();
    let mut golden = String::new();
    for (i, line) in corpus.iter().enumerate() {
        let raw: Vec<(Vec<TokenId>, f64)> = (0..3)
            .map(|_| {
                let len = r.gen_range(1..=3);
                let toks = (0..len).map(|_| TokenId(r.gen_range(2..5))).collect();
                (toks, r.gen_range(0.1..1.0))
            })
            .collect();
        let space = EvidenceSpace::new(raw, WeightDomain::Linear).unwrap();
        for h in space.hypotheses() {
            records.push(EvidenceRecord {
                source_id: i as u64,
                weight: h.weight,
                tokens: vocab.decode(&h.tokens[..h.tokens.len() - 1]).unwrap(),
            });
        }
        let src = vocab.encode(&[line]).unwrap();
        let best = exhaustive_decode(&src, &scorer, Some(&space), &cfg, &OracleBudget::default()).unwrap();
        golden.push_str(&vocab.detokenize(&best.tokens));
        golden.push('\n');
    }
    write(&dir.join("vocab.txt"), "<s>\n</s>\na\nb\nc\n");
    write(&dir.join("recorded.json"), &(scorer.to_json() + "\n"));
    write(&dir.join("corpus.txt"), &(corpus.join("\n") + "\n"));
    write(&dir.join("evidence.jsonl"), &jsonl(&records));
    write(&dir.join("config.json"), &(serde_json::to_string_pretty(&cfg).unwrap() + "\n"));
    write(&dir.join("golden.txt"), &golden);
}

fn main() {
    let root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"));
    for sub in ["toy", "recorded"] {
        std::fs::create_dir_all(root.join(sub)).unwrap();
    }
    toy(&root.join("toy"));
    sample_200(&root.join("toy"));
    recorded(&root.join("recorded"));
    println!("wrote fixtures under {}", root.display());
}
