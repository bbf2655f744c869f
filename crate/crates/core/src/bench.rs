//! Corpus decoding with run statistics, and the benchmark sweep.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::batch::{batches_in_order, bucket_by_length, decode_batch, restore_order};
use crate::config::DecoderConfig;
use crate::decoder::DecodeResult;
use crate::error::{Error, Result};
use crate::lmbr::{build_lmbr_matrix, compute_ngram_posteriors, EvidenceSpace, LmbrMatrix, LmbrParams};
use crate::scorer::{CountingScorer, RowwiseScorer, Scorer};
use crate::vocab::TokenId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub wall_seconds: f64,
    /// Output tokens, EOS excluded.
    pub output_words: u64,
    pub words_per_minute: f64,
    pub scorer_calls: u64,
    pub steps_total: u64,
    /// Summed over sentences, default rows included.
    pub lmbr_rows_built: u64,
    pub fallback_count: u64,
}

impl RunStats {
    pub fn with_wall(mut self, wall_seconds: f64) -> Self {
        self.wall_seconds = wall_seconds;
        self.words_per_minute = if wall_seconds > 0.0 {
            self.output_words as f64 / wall_seconds * 60.0
        } else {
            0.0
        };
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Sentences decoded together; 1 disables sentence batching.
    pub batch_sentences: usize,
    pub sort_by_length: bool,
    /// Worker threads over independent batches.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            batch_sentences: 1,
            sort_by_length: false,
            jobs: 1,
        }
    }
}

#[derive(Debug)]
pub struct CorpusRun {
    /// One result per input sentence, in input order.
    pub results: Vec<Result<DecodeResult>>,
    pub stats: RunStats,
    /// Largest single LMBR matrix, in rows.
    pub peak_rows: usize,
}

struct BatchDone {
    results: Vec<Result<DecodeResult>>,
    scorer_calls: usize,
    rows_built: usize,
    peak_rows: usize,
}

fn run_one_batch<S: Scorer + ?Sized>(
    idx: &[usize],
    corpus: &[Vec<TokenId>],
    scorer: &S,
    evidence: Option<&[EvidenceSpace]>,
    cfg: &DecoderConfig,
) -> Result<BatchDone> {
    let params = LmbrParams::new(cfg.theta);
    let mut matrices: Vec<Option<Result<LmbrMatrix>>> = Vec::with_capacity(idx.len());
    for &i in idx {
        matrices.push(evidence.map(|ev| {
            let p = compute_ngram_posteriors(&ev[i]);
            build_lmbr_matrix(&p, &ev[i], scorer.vocab_size(), &params)
        }));
    }
    let mut rows_built = 0;
    let mut peak_rows = 0;
    let mut ok_pos = Vec::new();
    let mut sources = Vec::new();
    let mut lmbrs = Vec::new();
    for (k, m) in matrices.iter().enumerate() {
        match m {
            Some(Err(_)) => continue,
            Some(Ok(m)) => {
                rows_built += m.rows_built();
                peak_rows = peak_rows.max(m.rows_built());
                lmbrs.push(Some(m));
            }
            None => lmbrs.push(None),
        }
        ok_pos.push(k);
        sources.push(corpus[idx[k]].as_slice());
    }
    let out = decode_batch(&sources, scorer, &lmbrs, cfg)?;
    let mut decoded = ok_pos.into_iter().zip(out.results).peekable();
    let mut results = Vec::with_capacity(idx.len());
    for (k, m) in matrices.into_iter().enumerate() {
        if let Some(Err(e)) = m {
            results.push(Err(e));
        } else {
            let (pos, r) = decoded.next().expect("one result per decoded sentence");
            debug_assert_eq!(pos, k);
            results.push(r);
        }
    }
    Ok(BatchDone {
        results,
        scorer_calls: out.scorer_calls,
        rows_built,
        peak_rows,
    })
}

/// Decodes a corpus, optionally with one evidence space per sentence.
/// `scorer_calls` counts the calls the decoder issues; wrap the scorer in a
/// [`CountingScorer`] to count what reaches the model.
pub fn run_corpus<S: Scorer + ?Sized>(
    corpus: &[Vec<TokenId>],
    scorer: &S,
    evidence: Option<&[EvidenceSpace]>,
    cfg: &DecoderConfig,
    opts: &RunOptions,
) -> Result<CorpusRun> {
    cfg.validate()?;
    if opts.batch_sentences == 0 || opts.jobs == 0 {
        return Err(Error::Config("batch_sentences and jobs must be >= 1".into()));
    }
    if let Some(ev) = evidence {
        if ev.len() != corpus.len() {
            return Err(Error::Contract(format!(
                "{} sentences but {} evidence spaces",
                corpus.len(),
                ev.len()
            )));
        }
    }
    let start = Instant::now();
    let batches = if opts.sort_by_length {
        bucket_by_length(corpus, opts.batch_sentences)
    } else {
        batches_in_order(corpus.len(), opts.batch_sentences)
    };

    let done: Vec<BatchDone> = if opts.jobs == 1 || batches.len() <= 1 {
        batches
            .iter()
            .map(|b| run_one_batch(b, corpus, scorer, evidence, cfg))
            .collect::<Result<_>>()?
    } else {
        let jobs = opts.jobs.min(batches.len());
        let mut slots: Vec<Option<Result<BatchDone>>> = (0..batches.len()).map(|_| None).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    let batches = &batches;
                    s.spawn(move || {
                        (w..batches.len())
                            .step_by(jobs)
                            .map(|i| (i, run_one_batch(&batches[i], corpus, scorer, evidence, cfg)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("decode worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("every batch assigned"))
            .collect::<Result<_>>()?
    };

    let mut stats = RunStats::default();
    let mut peak_rows = 0;
    let mut per_batch = Vec::with_capacity(done.len());
    for d in done {
        stats.scorer_calls += d.scorer_calls as u64;
        stats.lmbr_rows_built += d.rows_built as u64;
        peak_rows = peak_rows.max(d.peak_rows);
        per_batch.push(d.results);
    }
    let results = restore_order(&batches, per_batch);
    for r in results.iter().flatten() {
        stats.output_words += (r.tokens.len() - 1) as u64;
        stats.steps_total += r.stats.steps_used as u64;
        stats.fallback_count += u64::from(r.stats.fallback_used);
    }
    let stats = stats.with_wall(start.elapsed().as_secs_f64());
    Ok(CorpusRun {
        results,
        stats,
        peak_rows,
    })
}

pub const BENCH_CSV_HEADER: &str = "beam,batched,sentences,wpm,scorer_calls,peak_rows";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub beam: usize,
    /// Whether the `B` beam rows go to the model in one call.
    pub batched: bool,
    /// Sentences per batch.
    pub sentences: usize,
    pub wpm: f64,
    /// Calls that reached the model.
    pub scorer_calls: u64,
    pub peak_rows: usize,
    /// Fastest of the repeats.
    pub wall_seconds: f64,
    pub output_words: u64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.1},{},{}",
            self.beam, self.batched, self.sentences, self.wpm, self.scorer_calls, self.peak_rows
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchPlan {
    pub beams: Vec<usize>,
    /// Beam batching on/off.
    pub modes: Vec<bool>,
    pub sentences: Vec<usize>,
    pub repeat: usize,
    pub sort_by_length: bool,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            beams: vec![4, 8, 12],
            modes: vec![true, false],
            sentences: vec![1],
            repeat: 1,
            sort_by_length: true,
        }
    }
}

/// One row per (beam, mode, sentences) combination, in that nesting order.
/// Every repeat must produce the same outputs; the fastest wall time is
/// reported.
pub fn run_bench<S: Scorer>(
    corpus: &[Vec<TokenId>],
    scorer: &S,
    evidence: Option<&[EvidenceSpace]>,
    base: &DecoderConfig,
    plan: &BenchPlan,
) -> Result<Vec<BenchRow>> {
    if plan.repeat == 0 {
        return Err(Error::Config("repeat must be >= 1".into()));
    }
    let counting = CountingScorer::new(scorer);
    let rowwise = RowwiseScorer::new(&counting);
    let mut rows = Vec::new();
    for &beam in &plan.beams {
        for &batched in &plan.modes {
            for &n in &plan.sentences {
                let cfg = DecoderConfig {
                    beam_size: beam,
                    sentence_batch: n,
                    ..base.clone()
                };
                let opts = RunOptions {
                    batch_sentences: n,
                    sort_by_length: plan.sort_by_length,
                    jobs: 1,
                };
                let mut best: Option<BenchRow> = None;
                let mut first: Option<Vec<Option<Vec<TokenId>>>> = None;
                for _ in 0..plan.repeat {
                    counting.reset();
                    let run = if batched {
                        run_corpus(corpus, &counting, evidence, &cfg, &opts)?
                    } else {
                        run_corpus(corpus, &rowwise, evidence, &cfg, &opts)?
                    };
                    let outputs: Vec<Option<Vec<TokenId>>> = run
                        .results
                        .iter()
                        .map(|r| r.as_ref().ok().map(|d| d.tokens.clone()))
                        .collect();
                    match &first {
                        None => first = Some(outputs),
                        Some(f) if *f != outputs => {
                            return Err(Error::Contract("repeated bench run changed outputs".into()))
                        }
                        _ => {}
                    }
                    let row = BenchRow {
                        beam,
                        batched,
                        sentences: n,
                        wpm: run.stats.words_per_minute,
                        scorer_calls: counting.stats().calls,
                        peak_rows: run.peak_rows,
                        wall_seconds: run.stats.wall_seconds,
                        output_words: run.stats.output_words,
                    };
                    if best.as_ref().map_or(true, |b| row.wall_seconds < b.wall_seconds) {
                        best = Some(row);
                    }
                }
                rows.push(best.expect("repeat >= 1"));
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::NgramScorer;
    use crate::synthetic::{Workload, WorkloadSpec};

    fn workload(n: usize) -> (Workload, NgramScorer) {
        let w = Workload::generate(&WorkloadSpec {
            sentences: n,
            ..Default::default()
        })
        .unwrap();
        let s = NgramScorer::new(&w.counts, w.order, w.vocab.len()).unwrap();
        (w, s)
    }

    #[test]
    fn wpm_identity() {
        let s = RunStats {
            output_words: 30,
            ..Default::default()
        }
        .with_wall(2.0);
        assert_eq!(s.words_per_minute, 900.0);
    }

    #[test]
    fn corpus_accounting() {
        let (w, s) = workload(9);
        let cfg = DecoderConfig {
            beam_size: 4,
            ..Default::default()
        };
        let run = run_corpus(&w.corpus, &s, Some(&w.evidence), &cfg, &RunOptions::default()).unwrap();
        assert_eq!(run.results.len(), 9);
        let steps: usize = run.results.iter().map(|r| r.as_ref().unwrap().stats.steps_used).sum();
        assert_eq!(run.stats.steps_total, steps as u64);
        assert_eq!(run.stats.scorer_calls, steps as u64);
        let words: usize = run.results.iter().map(|r| r.as_ref().unwrap().tokens.len() - 1).sum();
        assert_eq!(run.stats.output_words, words as u64);

        let opts = RunOptions {
            batch_sentences: 3,
            sort_by_length: true,
            jobs: 2,
        };
        let batched = run_corpus(&w.corpus, &s, Some(&w.evidence), &cfg, &opts).unwrap();
        for (a, b) in run.results.iter().zip(&batched.results) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
        assert!(batched.stats.scorer_calls < run.stats.scorer_calls);
        assert_eq!(batched.stats.lmbr_rows_built, run.stats.lmbr_rows_built);
    }

    #[test]
    fn bench_rows_are_the_cartesian_product() {
        let (w, s) = workload(4);
        let plan = BenchPlan {
            beams: vec![2, 3, 4],
            ..Default::default()
        };
        let rows = run_bench(&w.corpus, &s, Some(&w.evidence), &DecoderConfig::default(), &plan).unwrap();
        assert_eq!(rows.len(), 6);
        let csv = bench_csv(&rows);
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(csv.lines().next().unwrap(), BENCH_CSV_HEADER);
        for pair in rows.chunks(2) {
            // without beam batching every row is its own call
            assert!(pair[0].batched && !pair[1].batched);
            assert!(pair[1].scorer_calls > pair[0].scorer_calls);
            assert_eq!(pair[0].output_words, pair[1].output_words);
        }
    }
}
