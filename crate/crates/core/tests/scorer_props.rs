mod common;

use lmbr_beam::scorer::{
    combine_ensemble, BatchState, CountingScorer, NgramScorer, RowwiseScorer, StateRow,
};
use lmbr_beam::synthetic::{random_recorded, rng};
use lmbr_beam::{Scorer, SourceContext, TokenId, Vocabulary};
use proptest::prelude::*;

/// Runs `steps` random steps from the initial state, each with `rows` rows.
fn random_states<S: Scorer>(
    s: &S,
    seed: u64,
    rows: usize,
    steps: usize,
) -> (SourceContext, BatchState, Vec<TokenId>) {
    use rand::Rng;
    let mut r = rng(seed);
    let v = s.vocab_size() as u32;
    let (ctx, init) = s.init_source(&[TokenId(2)]).unwrap();
    let mut state = init.gather(&vec![0; rows]).unwrap();
    let mut toks = vec![TokenId::START; rows];
    for _ in 0..steps {
        let (_, next) = s.step(&state, &toks, &[&ctx]).unwrap();
        let idx: Vec<usize> = (0..rows).map(|_| r.gen_range(0..rows)).collect();
        state = next.gather(&idx).unwrap();
        toks = (0..rows).map(|_| TokenId(r.gen_range(1..v))).collect();
    }
    (ctx, state, toks)
}

fn toy_ngram() -> NgramScorer {
    common::toy().scorer
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ngram_rows_are_distributions(seed in any::<u64>(), rows in 1usize..8, steps in 0usize..5) {
        let s = toy_ngram();
        let (ctx, state, toks) = random_states(&s, seed, rows, steps);
        let (block, next) = s.step(&state, &toks, &[&ctx]).unwrap();
        prop_assert_eq!(next.len(), rows);
        for j in 0..rows {
            let z: f64 = block.row(j).iter().map(|x| x.exp()).sum();
            prop_assert!((z - 1.0).abs() < 1e-9, "row {} sums to {}", j, z);
        }
    }

    #[test]
    fn steps_are_deterministic_and_rows_independent(
        seed in any::<u64>(),
        rows in 1usize..8,
        steps in 0usize..4,
        which in 0usize..2,
    ) {
        let recorded = random_recorded(&mut rng(seed ^ 7), 5, 4);
        let ngram = toy_ngram();
        let s: &dyn Scorer = if which == 0 { &recorded } else { &ngram };
        let (ctx, state, toks) = random_states(&s, seed, rows, steps);
        let (a, na) = s.step(&state, &toks, &[&ctx]).unwrap();
        let (b, nb) = s.step(&state, &toks, &[&ctx]).unwrap();
        prop_assert_eq!(a.values(), b.values());
        prop_assert_eq!(na.rows(), nb.rows());

        // reverse the rows: the outputs reverse with them
        let perm: Vec<usize> = (0..rows).rev().collect();
        let pstate = state.gather(&perm).unwrap();
        let ptoks: Vec<TokenId> = perm.iter().map(|&i| toks[i]).collect();
        let (pb, pn) = s.step(&pstate, &ptoks, &[&ctx]).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(pb.row(j), a.row(i));
            prop_assert_eq!(&pn.rows()[j], &na.rows()[i]);
        }

        // one call per row gives the same block
        let rowwise = RowwiseScorer::new(s);
        let (rb, rn) = rowwise.step(&state, &toks, &[&ctx]).unwrap();
        prop_assert_eq!(rb.values(), a.values());
        prop_assert_eq!(rn.rows(), na.rows());
    }

    #[test]
    fn ensembles_add_member_scores(seed in any::<u64>(), rows in 1usize..6, steps in 0usize..3) {
        let a = random_recorded(&mut rng(seed), 4, 3);
        let b = random_recorded(&mut rng(seed.wrapping_add(1)), 4, 3);
        let e = combine_ensemble(vec![Box::new(a.clone()), Box::new(b.clone())]).unwrap();
        prop_assert_eq!(e.members(), 2);
        // drive all three with the same token sequence
        use rand::Rng;
        let mut r = rng(seed ^ 99);
        let (ca, mut sa) = a.init_source(&[TokenId(2)]).unwrap();
        let (cb, mut sb) = b.init_source(&[TokenId(2)]).unwrap();
        let (ce, mut se) = e.init_source(&[TokenId(2)]).unwrap();
        sa = sa.gather(&vec![0; rows]).unwrap();
        sb = sb.gather(&vec![0; rows]).unwrap();
        se = se.gather(&vec![0; rows]).unwrap();
        let mut toks = vec![TokenId::START; rows];
        for _ in 0..=steps {
            let (pa, na) = a.step(&sa, &toks, &[&ca]).unwrap();
            let (pb, nb) = b.step(&sb, &toks, &[&cb]).unwrap();
            let (pe, ne) = e.step(&se, &toks, &[&ce]).unwrap();
            for ((x, y), z) in pa.values().iter().zip(pb.values()).zip(pe.values()) {
                prop_assert_eq!(x + y, *z);
            }
            let idx: Vec<usize> = (0..rows).map(|_| r.gen_range(0..rows)).collect();
            sa = na.gather(&idx).unwrap();
            sb = nb.gather(&idx).unwrap();
            se = ne.gather(&idx).unwrap();
            toks = (0..rows).map(|_| TokenId(r.gen_range(1..4))).collect();
        }
    }
}

#[test]
fn vocabulary_ids_are_stable_across_loads() {
    let a = Vocabulary::load(common::data("toy/vocab.txt")).unwrap();
    let b = Vocabulary::load(common::data("toy/vocab.txt")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.id("<s>"), Some(TokenId::START));
    assert_eq!(a.id("</s>"), Some(TokenId::EOS));
    for (i, tok) in a.tokens().iter().enumerate() {
        assert_eq!(b.id(tok), Some(TokenId(i as u32)));
    }
}

#[test]
fn counting_scorer_counts_calls_and_rows() {
    let s = CountingScorer::new(toy_ngram());
    let (ctx, init) = s.init_source(&[TokenId(2)]).unwrap();
    let state = init.gather(&[0, 0, 0]).unwrap();
    let toks = [TokenId::START; 3];
    s.step(&state, &toks, &[&ctx]).unwrap();
    s.step(&state, &toks, &[&ctx, &ctx, &ctx]).unwrap();
    assert_eq!(s.stats().calls, 2);
    assert_eq!(s.stats().rows, 6);
    let rowwise = RowwiseScorer::new(&s);
    rowwise.step(&state, &toks, &[&ctx]).unwrap();
    assert_eq!(s.stats().calls, 5);
    s.reset();
    assert_eq!(s.stats().calls, 0);
}

#[test]
fn state_rows_carry_ngram_history() {
    let s = toy_ngram();
    let (ctx, init) = s.init_source(&[TokenId(2)]).unwrap();
    let (_, st) = s.step(&init, &[TokenId::START], &[&ctx]).unwrap();
    assert_eq!(st.rows()[0], StateRow(vec![0]));
}
