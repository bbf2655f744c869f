//! Replay recorded score matrices and look at the search bookkeeping.

use std::path::Path;

use lmbr_beam::decoder::MASKED;
use lmbr_beam::scorer::RecordedScorer;
use lmbr_beam::{decode_with_trace, DecoderConfig, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/recorded");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let scorer = RecordedScorer::load(dir.join("recorded.json"))?;
    let cfg = DecoderConfig {
        beam_size: 3,
        max_steps_slope: 1.0,
        max_steps_offset: 3.0,
        ..DecoderConfig::default()
    };
    let src = vocab.encode(&["a"])?;
    let (r, trace) = decode_with_trace(&src, &scorer, None, &cfg, None)?;

    for t in 1..=trace.book.steps() {
        let cells: Vec<String> = (0..cfg.beam_size)
            .map(|j| {
                let q = trace.book.q[t][j];
                let word = vocab.tokens()[trace.book.y[t][j].index()].as_str();
                let q = if q == MASKED { "-inf".to_string() } else { format!("{q:.2}") };
                format!("{word}<-{} {q}", trace.book.b[t][j])
            })
            .collect();
        println!("t={t}: {}", cells.join(" | "));
    }
    for f in &trace.finished {
        println!("finished at t={} row {}: {:.3}", f.t, f.j, f.score);
    }
    println!("best: {} ({:.3})", vocab.detokenize(&r.tokens), r.score);
    Ok(())
}
