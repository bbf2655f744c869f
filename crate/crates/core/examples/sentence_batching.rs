//! Several sentences per model call: same outputs, fewer calls.

use std::path::Path;

use lmbr_beam::batch::bucket_by_length;
use lmbr_beam::scorer::{CountingScorer, NgramCounts, NgramScorer};
use lmbr_beam::{decode, decode_batch, DecoderConfig, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let counts = NgramCounts::load(dir.join("counts.tsv"), &vocab)?;
    let scorer = CountingScorer::new(NgramScorer::new(&counts, counts.max_order(), vocab.len())?);
    let cfg = DecoderConfig::default();
    let corpus: Vec<Vec<_>> = std::fs::read_to_string(dir.join("corpus.txt"))
        .expect("corpus")
        .lines()
        .map(|l| vocab.encode(&l.split_whitespace().collect::<Vec<_>>()))
        .collect::<Result<_, _>>()?;

    let alone: Vec<_> = corpus.iter().map(|s| decode(s, &scorer, None, &cfg, None)).collect::<Result<_, _>>()?;
    println!("one sentence per call: {} calls", scorer.stats().calls);

    for n in [2, 3, 5, 7] {
        scorer.reset();
        let mut same = true;
        for batch in bucket_by_length(&corpus, n) {
            let sources: Vec<&[_]> = batch.iter().map(|&i| corpus[i].as_slice()).collect();
            let out = decode_batch(&sources, &scorer, &vec![None; sources.len()], &cfg)?;
            for (&i, r) in batch.iter().zip(out.results) {
                same &= r? == alone[i];
            }
        }
        println!("{n} sentences per call: {} calls, identical output: {same}", scorer.stats().calls);
    }
    Ok(())
}
