//! Throughput over beam sizes and sentence batch sizes, as CSV.
//!
//! ```text
//! cargo run --release --example bench_sweep [-- SENTENCES]
//! ```

use lmbr_beam::bench::{bench_csv, run_bench, BenchPlan};
use lmbr_beam::scorer::NgramScorer;
use lmbr_beam::synthetic::{Workload, WorkloadSpec};
use lmbr_beam::DecoderConfig;

fn main() -> lmbr_beam::Result<()> {
    let n = std::env::args().nth(1).map_or(300, |s| s.parse().expect("sentence count"));
    let w = Workload::generate(&WorkloadSpec {
        sentences: n,
        ..WorkloadSpec::default()
    })?;
    let scorer = NgramScorer::new(&w.counts, w.order, w.vocab.len())?;
    let cfg = DecoderConfig::default();

    let beams = BenchPlan {
        beams: vec![4, 8, 12],
        modes: vec![true, false],
        sentences: vec![1],
        repeat: 2,
        sort_by_length: true,
    };
    print!("{}", bench_csv(&run_bench(&w.corpus, &scorer, Some(&w.evidence), &cfg, &beams)?));

    let sentences = BenchPlan {
        beams: vec![12],
        modes: vec![true],
        sentences: vec![1, 3, 5, 7],
        ..beams
    };
    print!("{}", bench_csv(&run_bench(&w.corpus, &scorer, Some(&w.evidence), &cfg, &sentences)?));
    Ok(())
}
