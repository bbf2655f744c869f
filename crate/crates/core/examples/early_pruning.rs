//! Early pruning by probability ratio to the best candidate.

use std::path::Path;
use std::time::Instant;

use lmbr_beam::scorer::{NgramCounts, NgramScorer};
use lmbr_beam::{decode, DecoderConfig, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let counts = NgramCounts::load(dir.join("counts.tsv"), &vocab)?;
    let scorer = NgramScorer::new(&counts, counts.max_order(), vocab.len())?;
    let corpus: Vec<Vec<_>> = std::fs::read_to_string(dir.join("corpus.txt"))
        .expect("corpus")
        .lines()
        .map(|l| vocab.encode(&l.split_whitespace().collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;

    for width in [0.0, 0.001, 0.01, 0.1] {
        let cfg = DecoderConfig {
            prune_width: width,
            ..DecoderConfig::default()
        };
        let start = Instant::now();
        let mut total = 0.0;
        let mut finished = 0;
        for s in &corpus {
            let r = decode(s, &scorer, None, &cfg, None)?;
            total += r.score;
            finished += r.stats.finished_count;
        }
        println!(
            "width {width:<6} total score {total:.3}  finished hypotheses {finished}  {:?}",
            start.elapsed()
        );
    }
    Ok(())
}
