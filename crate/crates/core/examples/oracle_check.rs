//! Exhaustive search against the beam decoder on a random toy problem.

use lmbr_beam::check::check_instance;
use lmbr_beam::oracle::{exhaustive_decode, OracleBudget};
use lmbr_beam::synthetic::ToyInstance;
use lmbr_beam::{build_lmbr_matrix, compute_ngram_posteriors, decode, LmbrParams};

fn main() -> lmbr_beam::Result<()> {
    let seed = std::env::args().nth(1).map_or(42, |s| s.parse().expect("seed"));
    let inst = ToyInstance::random(seed);
    let cfg = inst.config();
    println!("V={} T={} beam={} lambda={}", inst.vocab_size, inst.steps, cfg.beam_size, inst.lambda);

    let p = compute_ngram_posteriors(&inst.evidence);
    let m = build_lmbr_matrix(&p, &inst.evidence, inst.vocab_size, &LmbrParams::new(cfg.theta))?;
    let beam = decode(&inst.source, &inst.scorer, Some(&m), &cfg, None)?;
    let exact = exhaustive_decode(&inst.source, &inst.scorer, Some(&inst.evidence), &cfg, &OracleBudget::default())?;
    println!("beam:       {:?} {:.12}", beam.tokens, beam.score);
    println!("exhaustive: {:?} {:.12}", exact.tokens, exact.score);

    match check_instance(&inst, 0.0) {
        Ok(()) => println!("all checks pass"),
        Err(e) => println!("mismatch: {e}\n{}", inst.to_json()),
    }
    Ok(())
}
