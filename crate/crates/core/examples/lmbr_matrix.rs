//! Posteriors and the history-keyed score matrix for a 200-best list.

use std::path::Path;

use lmbr_beam::lmbr::{read_evidence_file, WeightDomain};
use lmbr_beam::{build_lmbr_matrix, compute_ngram_posteriors, DecoderConfig, LmbrParams, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let (_, ev) = read_evidence_file(dir.join("sample_200.jsonl"), &vocab, WeightDomain::Linear)?.remove(0);
    let theta = DecoderConfig::default().theta;

    let post = compute_ngram_posteriors(&ev);
    let m = build_lmbr_matrix(&post, &ev, vocab.len(), &LmbrParams::new(theta))?;
    let s = m.stats();
    println!("{} hypotheses, {} n-grams with mass", ev.len(), s.nonzero_posteriors);
    println!("{} distinct contexts, {} rows built, {} sparse updates", s.distinct_contexts, m.rows_built(), s.sparse_updates);

    let mut top: Vec<_> = post.iter().filter(|(g, _)| g.len() == 2).collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (g, p) in top.iter().take(5) {
        println!("P({}) = {p:.3}", vocab.decode(g)?.join(" "));
    }

    let hist = &ev.hypotheses()[0].tokens[..2];
    let row = m.row_for(&[&[lmbr_beam::TokenId::START], hist].concat());
    let best = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
    println!(
        "after <s> {}: best continuation {} ({:.3})",
        vocab.decode(hist)?.join(" "),
        vocab.tokens()[best],
        row[best]
    );
    Ok(())
}
