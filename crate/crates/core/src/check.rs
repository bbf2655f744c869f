//! Per-instance cross-checks between the decoder and the brute-force
//! references, as run by `oracle-check`.

use crate::batch::decode_batch;
use crate::decoder::{decode, DecodeResult};
use crate::lmbr::{build_lmbr_matrix, compute_ngram_posteriors, LmbrParams};
use crate::oracle::{
    bruteforce_posteriors, exhaustive_decode, score_hypothesis_eq2, Eq2Terms, OracleBudget,
};
use crate::synthetic::ToyInstance;

pub const SCORE_TOLERANCE: f64 = 1e-9;

/// Runs every check on `inst`. `theta_offset` is added to the Θ the
/// decoder sees (not the reference); anything non-zero should fail.
/// Returns a description of the first mismatch.
pub fn check_instance(inst: &ToyInstance, theta_offset: f64) -> std::result::Result<(), String> {
    let cfg = inst.config();
    let scorer = &inst.scorer;
    let fail = |what: &str, e: &dyn std::fmt::Display| format!("{what}: {e}");

    let fast = compute_ngram_posteriors(&inst.evidence);
    let slow = bruteforce_posteriors(&inst.evidence);
    if fast != slow {
        return Err("n-gram posteriors differ from the brute-force table".into());
    }

    let mut theta = cfg.theta;
    for x in &mut theta {
        *x += theta_offset;
    }
    let matrix = build_lmbr_matrix(&fast, &inst.evidence, inst.vocab_size, &LmbrParams::new(theta))
        .map_err(|e| fail("matrix build", &e))?;
    let got = decode(&inst.source, scorer, Some(&matrix), &cfg, None)
        .map_err(|e| fail("decode", &e))?;
    let want = exhaustive_decode(&inst.source, scorer, Some(&inst.evidence), &cfg, &OracleBudget::default())
        .map_err(|e| fail("exhaustive decode", &e))?;
    if got.tokens != want.tokens || (got.score - want.score).abs() > SCORE_TOLERANCE {
        return Err(format!(
            "decode {:?} ({}) but exhaustive search {:?} ({})",
            got.tokens, got.score, want.tokens, want.score
        ));
    }

    let terms = Eq2Terms {
        posteriors: &slow,
        theta: cfg.theta,
        lambda: inst.lambda,
    };
    self_consistent(inst, &got, Some(&terms))?;

    let pure = decode(&inst.source, scorer, None, &cfg, None).map_err(|e| fail("pure decode", &e))?;
    self_consistent(inst, &pure, None)?;

    let sources = [&inst.source, &inst.source, &inst.source];
    let batch = decode_batch(&sources, scorer, &[Some(&matrix), None, Some(&matrix)], &cfg)
        .map_err(|e| fail("batched decode", &e))?;
    let expected = [&got, &pure, &got];
    for (k, (r, e)) in batch.results.iter().zip(expected).enumerate() {
        match r {
            Ok(r) if r == e => {}
            Ok(r) => {
                return Err(format!(
                    "batched sentence {k} gave {:?} ({}), alone {:?} ({})",
                    r.tokens, r.score, e.tokens, e.score
                ))
            }
            Err(err) => return Err(fail("batched decode", err)),
        }
    }
    Ok(())
}

fn self_consistent(
    inst: &ToyInstance,
    r: &DecodeResult,
    terms: Option<&Eq2Terms<'_>>,
) -> std::result::Result<(), String> {
    let s = score_hypothesis_eq2(&inst.source, &r.tokens, &inst.scorer, terms)
        .map_err(|e| format!("rescoring: {e}"))?;
    if (s - r.score).abs() > SCORE_TOLERANCE {
        return Err(format!(
            "decoder score {} for {:?} but direct evaluation gives {s}",
            r.score, r.tokens
        ));
    }
    Ok(())
}
