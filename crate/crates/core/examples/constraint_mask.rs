//! Forbid tokens during search, with a blacklist or any closure.

use std::path::Path;

use lmbr_beam::decoder::TokenBlacklist;
use lmbr_beam::scorer::{NgramCounts, NgramScorer};
use lmbr_beam::{decode, DecoderConfig, TokenId, Vocabulary};

fn main() -> lmbr_beam::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
    let vocab = Vocabulary::load(dir.join("vocab.txt"))?;
    let counts = NgramCounts::load(dir.join("counts.tsv"), &vocab)?;
    let scorer = NgramScorer::new(&counts, counts.max_order(), vocab.len())?;
    let cfg = DecoderConfig::default();
    let src = vocab.encode(&["w45", "w43"])?;

    let free = decode(&src, &scorer, None, &cfg, None)?;
    println!("unconstrained: {}", vocab.detokenize(&free.tokens));

    let banned = TokenBlacklist::new(vocab.encode(&["w43"])?);
    let r = decode(&src, &scorer, None, &cfg, Some(&banned))?;
    println!("without w43: {}", vocab.detokenize(&r.tokens));

    // at least four words before the sentence may end
    let min_len = |step: usize, _row: usize, tok: TokenId| tok.is_eos() && step <= 4;
    let r = decode(&src, &scorer, None, &cfg, Some(&min_len))?;
    println!("at least four words: {}", vocab.detokenize(&r.tokens));
    Ok(())
}
