//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

mod common;

use std::time::Instant;

use common::{toy, Consistency, Toy};
use lmbr_beam::bench::{run_bench, run_corpus, BenchPlan, RunOptions};
use lmbr_beam::decoder::TokenBlacklist;
use lmbr_beam::lmbr::{
    build_lmbr_matrix, compute_ngram_posteriors, read_evidence_file, EvidenceSpace, LmbrParams,
    WeightDomain,
};
use lmbr_beam::oracle::{bruteforce_posteriors, exhaustive_decode, OracleBudget};
use lmbr_beam::scorer::{NgramScorer, RecordedScorer};
use lmbr_beam::synthetic::{random_evidence, rng, ToyInstance, Workload, WorkloadSpec};
use lmbr_beam::{decode, DecoderConfig, Lambda, LmbrMatrix, TokenId, Vocabulary};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn matrix(e: &EvidenceSpace, vocab: usize, theta: [f64; 5]) -> LmbrMatrix {
    build_lmbr_matrix(&compute_ngram_posteriors(e), e, vocab, &LmbrParams::new(theta)).unwrap()
}

fn oracle_equivalence(cons: &mut Consistency) -> Outcome {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let mut by_v = [0usize; 5];
    for seed in 0..200u64 {
        let inst = ToyInstance::random(10_000 + seed);
        let cfg = inst.config();
        ensure(cfg.beam_size == inst.vocab_size.pow(inst.steps as u32), || "beam".into())?;
        let m = matrix(&inst.evidence, inst.vocab_size, cfg.theta);
        let got = decode(&inst.source, &inst.scorer, Some(&m), &cfg, None).map_err(|e| e.to_string())?;
        let want = exhaustive_decode(&inst.source, &inst.scorer, Some(&inst.evidence), &cfg, &budget)
            .map_err(|e| e.to_string())?;
        ensure(got.tokens == want.tokens && (got.score - want.score).abs() <= 1e-9, || {
            format!(
                "seed {}: decode {:?} ({}) vs exhaustive {:?} ({})",
                inst.seed, got.tokens, got.score, want.tokens, want.score
            )
        })?;
        cons.check(&inst.source, &got, &inst.scorer, Some((&inst.evidence, cfg.theta, inst.lambda)));
        by_v[inst.vocab_size] += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "200/200 instances match (V=3: {}, V=4: {}) in {secs:.2}s",
        by_v[3], by_v[4]
    ))
}

fn posterior_correctness() -> Outcome {
    let mut r = rng(501);
    for case in 0..500 {
        let v = r.gen_range(3..=8);
        let e = random_evidence(&mut r, v, 1, 10, 8);
        ensure(compute_ngram_posteriors(&e) == bruteforce_posteriors(&e), || {
            format!("case {case}: tables differ for {e:?}")
        })?;
    }
    let t = |ids: &[u32]| ids.iter().map(|&i| TokenId(i)).collect::<Vec<_>>();
    let worked = EvidenceSpace::new(
        vec![(t(&[2, 3]), 0.6), (t(&[2, 4]), 0.4)],
        WeightDomain::Linear,
    )
    .unwrap();
    let p = compute_ngram_posteriors(&worked);
    ensure(p.get(&t(&[2, 3])) == 0.6, || format!("P(a b) = {}", p.get(&t(&[2, 3]))))?;
    Ok("500/500 random spaces exact; worked P(a b) = 0.6".into())
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["lmbr-beam"];
    full.extend_from_slice(args);
    let code = lmbr_beam::cli::run(full, &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

fn pure_identity(t: &Toy, cons: &mut Consistency) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = |p: &std::path::Path| p.to_str().unwrap().to_string();
    let base = [
        "decode".to_string(),
        "--vocab".into(),
        s(&common::data("toy/vocab.txt")),
        "--scorer".into(),
        format!("ngram:{}", s(&common::data("toy/counts.tsv"))),
        "--input".into(),
        s(&common::data("toy/corpus.txt")),
        "--evidence".into(),
        s(&common::data("toy/evidence.jsonl")),
    ];
    let mut outputs = Vec::new();
    for lambda in [Lambda::Auto, Lambda::Fixed(1.0)] {
        let cfg = DecoderConfig {
            theta: [0.0; 5],
            lambda,
            ..DecoderConfig::default()
        };
        let path = dir.path().join("zero.json");
        std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let mut args: Vec<String> = base.to_vec();
        args.extend(["--config".into(), s(&path)]);
        let (code, zero, _) = run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
        ensure(code == 0, || format!("theta=0 run exited {code}"))?;
        args.push("--pure".into());
        let (code, pure, err) = run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
        ensure(code == 0, || format!("--pure run exited {code}"))?;
        ensure(err.contains("warning"), || "no warning for --pure with --evidence".into())?;
        ensure(zero == pure, || format!("outputs differ for lambda {lambda:?}"))?;
        ensure(zero.iter().filter(|&&b| b == b'\n').count() == 100, || "line count".into())?;
        outputs.push(zero);
    }
    for (src, ev) in t.corpus.iter().zip(&t.evidence) {
        let cfg = DecoderConfig {
            theta: [0.0; 5],
            ..DecoderConfig::default()
        };
        let m = matrix(ev, t.vocab.len(), cfg.theta);
        let r = decode(src, &t.scorer, Some(&m), &cfg, None).unwrap();
        cons.check(src, &r, &t.scorer, Some((ev, cfg.theta, 0.5)));
        let r = decode(src, &t.scorer, None, &cfg, None).unwrap();
        cons.check(src, &r, &t.scorer, None);
    }
    Ok(format!(
        "100 sentences byte-identical ({} bytes) for lambda auto and 1",
        outputs[0].len()
    ))
}

fn batching_invariance(t: &Toy, cons: &mut Consistency) -> Outcome {
    let cfg = &t.config;
    let lambda = cfg.lambda.resolve(1);
    let matrices: Vec<LmbrMatrix> = t
        .evidence
        .iter()
        .map(|e| matrix(e, t.vocab.len(), cfg.theta))
        .collect();
    let alone: Vec<_> = t
        .corpus
        .iter()
        .zip(&matrices)
        .map(|(s, m)| decode(s, &t.scorer, Some(m), cfg, None).unwrap())
        .collect();
    for ((s, r), e) in t.corpus.iter().zip(&alone).zip(&t.evidence) {
        cons.check(s, r, &t.scorer, Some((e, cfg.theta, lambda)));
    }
    let text = |rs: &[lmbr_beam::DecodeResult]| {
        rs.iter().map(|r| t.vocab.detokenize(&r.tokens) + "\n").collect::<String>()
    };
    let alone_text = text(&alone);
    let mut calls = Vec::new();
    for n in [1usize, 2, 3, 5, 7] {
        for sort in [false, true] {
            let opts = RunOptions {
                batch_sentences: n,
                sort_by_length: sort,
                jobs: 1,
            };
            let run = run_corpus(&t.corpus, &t.scorer, Some(&t.evidence), cfg, &opts).unwrap();
            let got: Vec<_> = run.results.into_iter().map(Result::unwrap).collect();
            ensure(got == alone, || format!("N={n} sort={sort}: results differ"))?;
            ensure(text(&got) == alone_text, || format!("N={n}: text differs"))?;
            if !sort {
                calls.push((n, run.stats.scorer_calls));
            }
        }
    }
    let one = calls[0].1;
    for &(n, c) in &calls[1..] {
        ensure(c < one, || format!("N={n}: {c} calls, not below {one}"))?;
    }
    Ok(format!(
        "byte-identical for N in 2,3,5,7; calls {}",
        calls.iter().map(|(n, c)| format!("N={n}:{c}")).collect::<Vec<_>>().join(" ")
    ))
}

fn row_bound() -> Outcome {
    let vocab = Vocabulary::load(common::data("toy/vocab.txt")).unwrap();
    let spaces = read_evidence_file(common::data("toy/sample_200.jsonl"), &vocab, WeightDomain::Linear)
        .map_err(|e| e.to_string())?;
    ensure(spaces.len() == 1 && spaces[0].1.len() == 200, || "sample is not one 200-best".into())?;
    let e = &spaces[0].1;
    let m = matrix(e, vocab.len(), DecoderConfig::default().theta);
    let s = m.stats();
    ensure(m.rows_built() <= s.distinct_contexts + 1, || {
        format!("{} rows for {} contexts", m.rows_built(), s.distinct_contexts)
    })?;
    Ok(format!(
        "lmbr_rows_built = {} (<= 500: {}), distinct contexts = {}",
        m.rows_built(),
        m.rows_built() <= 500,
        s.distinct_contexts
    ))
}

fn eos_fallback(cons: &mut Consistency) -> Outcome {
    // V = 6, B = 2: the four word columns always outrank EOS
    let v: usize = 6;
    let row = |r: &mut rand_chacha::ChaCha8Rng| {
        let mut x: Vec<f64> = (0..v).map(|_| r.gen_range(-2.0..-0.5)).collect();
        x[1] = -60.0;
        x
    };
    let mut r = rng(66);
    let steps = (0..4u32).map(|t| (0..v.pow(t)).map(|_| row(&mut r)).collect()).collect();
    let scorer = RecordedScorer::new(v, steps).unwrap();
    let cfg = DecoderConfig {
        beam_size: 2,
        max_steps_slope: 1.0,
        max_steps_offset: 3.0,
        ..DecoderConfig::default()
    };
    let src = [TokenId(2)];
    let (res, trace) = lmbr_beam::decode_with_trace(&src, &scorer, None, &cfg, None)
        .map_err(|e| e.to_string())?;
    ensure(trace.finished.is_empty(), || "an EOS survived top-B".into())?;
    ensure(res.stats.steps_used == 4, || format!("{} steps", res.stats.steps_used))?;
    ensure(res.stats.fallback_used, || "fallback_used is false".into())?;
    ensure(res.tokens.last() == Some(&TokenId::EOS), || "not EOS-terminated".into())?;
    ensure(res.tokens.iter().filter(|t| t.is_eos()).count() == 1, || "extra EOS".into())?;
    cons.check(&src, &res, &scorer, None);
    Ok(format!("no EOS in any top-B over 4 steps; fallback returned {:?}", res.tokens))
}

fn constraint_masking(t: &Toy, cons: &mut Consistency) -> Outcome {
    let cfg = &t.config;
    let lambda = cfg.lambda.resolve(1);
    let words: Vec<TokenId> = (2..t.vocab.len() as u32).map(TokenId).collect();
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut r = rng(7_000 + seed);
        let i = r.gen_range(0..t.corpus.len());
        let m = matrix(&t.evidence[i], t.vocab.len(), cfg.theta);
        let unmasked = decode(&t.corpus[i], &t.scorer, Some(&m), cfg, None).unwrap();
        // half the time, blacklist words the unconstrained output uses
        let k = r.gen_range(1..=10);
        let mut banned: Vec<TokenId> = words.choose_multiple(&mut r, k).copied().collect();
        if seed % 2 == 0 {
            banned.extend(unmasked.tokens.iter().filter(|t| !t.is_eos()).take(2));
        }
        let mask = TokenBlacklist::new(banned.iter().copied());
        let res = decode(&t.corpus[i], &t.scorer, Some(&m), cfg, Some(&mask))
            .map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(!res.tokens.iter().any(|x| mask.contains(*x)), || {
            format!("seed {seed}: output {:?} uses a banned token", res.tokens)
        })?;
        if res.tokens != unmasked.tokens {
            hits += 1;
        }
        cons.check(&t.corpus[i], &res, &t.scorer, Some((&t.evidence[i], cfg.theta, lambda)));
    }
    Ok(format!("100/100 outputs clean; {hits} changed by the mask"))
}

fn pruning_sanity(t: &Toy, cons: &mut Consistency) -> Outcome {
    let base = &t.config;
    let lambda = base.lambda.resolve(1);
    let mut pruned_worse = 0;
    let mut pruned_equal = 0;
    for (i, src) in t.corpus.iter().enumerate() {
        let m = matrix(&t.evidence[i], t.vocab.len(), base.theta);
        let off = decode(src, &t.scorer, Some(&m), &DecoderConfig { prune_width: 0.0, ..base.clone() }, None).unwrap();
        // a width so small that no finite cell falls under it
        let tiny = DecoderConfig {
            prune_width: f64::MIN_POSITIVE,
            ..base.clone()
        };
        let nearly = decode(src, &t.scorer, Some(&m), &tiny, None).unwrap();
        ensure(off == nearly, || format!("sentence {i}: width 0 differs from no pruning"))?;
        let cfg = DecoderConfig {
            prune_width: 0.01,
            ..base.clone()
        };
        let on = decode(src, &t.scorer, Some(&m), &cfg, None).unwrap();
        ensure(on.normalized_score <= off.normalized_score + 1e-9, || {
            format!(
                "sentence {i}: pruned {} beats unpruned {}",
                on.normalized_score, off.normalized_score
            )
        })?;
        if on.normalized_score < off.normalized_score {
            pruned_worse += 1;
        } else {
            pruned_equal += 1;
        }
        for r in [&off, &on] {
            cons.check(src, r, &t.scorer, Some((&t.evidence[i], base.theta, lambda)));
        }
    }
    Ok(format!(
        "width 0 == no pruning on 100 sentences; width 0.01 never better ({pruned_equal} equal, {pruned_worse} worse)"
    ))
}

fn throughput(cons: &mut Consistency) -> Outcome {
    let start = Instant::now();
    let w = Workload::generate(&WorkloadSpec {
        seed: 1000,
        sentences: 1000,
        ..WorkloadSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let scorer = NgramScorer::new(&w.counts, w.order, w.vocab.len()).unwrap();
    let cfg = DecoderConfig::default();
    ensure(cfg.beam_size == 12, || "default beam is not 12".into())?;
    let plan = BenchPlan {
        beams: vec![12],
        modes: vec![true],
        sentences: vec![1, 5],
        repeat: 5,
        sort_by_length: true,
    };
    let rows = run_bench(&w.corpus, &scorer, Some(&w.evidence), &cfg, &plan).map_err(|e| e.to_string())?;
    let (one, five) = (&rows[0], &rows[1]);
    ensure(five.scorer_calls as f64 <= 0.35 * one.scorer_calls as f64, || {
        format!("calls {} vs {}", five.scorer_calls, one.scorer_calls)
    })?;
    ensure(five.wall_seconds < one.wall_seconds, || {
        format!("wall {:.3}s batched vs {:.3}s unbatched", five.wall_seconds, one.wall_seconds)
    })?;
    // spot-check scores on a slice of the corpus
    let lambda = cfg.lambda.resolve(1);
    for i in (0..w.corpus.len()).step_by(20) {
        let m = matrix(&w.evidence[i], w.vocab.len(), cfg.theta);
        let r = decode(&w.corpus[i], &scorer, Some(&m), &cfg, None).unwrap();
        cons.check(&w.corpus[i], &r, &scorer, Some((&w.evidence[i], cfg.theta, lambda)));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "calls N=5 {} vs N=1 {} (ratio {:.3}); wall {:.3}s vs {:.3}s ({:.0} vs {:.0} wpm); {secs:.1}s total",
        five.scorer_calls,
        one.scorer_calls,
        five.scorer_calls as f64 / one.scorer_calls as f64,
        five.wall_seconds,
        one.wall_seconds,
        five.wpm,
        one.wpm
    ))
}

fn main() {
    let t = toy();
    let mut cons = Consistency::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("oracle equivalence", oracle_equivalence(&mut cons)));
    results.push(("posterior correctness", posterior_correctness()));
    results.push(("pure-mode identity", pure_identity(&t, &mut cons)));
    results.push(("sentence-batching invariance", batching_invariance(&t, &mut cons)));
    results.push(("L-matrix row bound", row_bound()));
    results.push(("EOS fallback", eos_fallback(&mut cons)));
    results.push(("constraint masking", constraint_masking(&t, &mut cons)));
    results.push(("pruning sanity", pruning_sanity(&t, &mut cons)));
    results.push(("throughput", throughput(&mut cons)));
    let sc = if cons.failures == 0 {
        Ok(format!("{} results rescored, worst deviation {:.2e}", cons.checked, cons.worst))
    } else {
        Err(format!(
            "{} of {} results off by more than 1e-9 (worst {:.2e})",
            cons.failures, cons.checked, cons.worst
        ))
    };
    results.push(("score self-consistency", sc));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
