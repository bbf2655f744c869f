//! The `lmbr-beam` command line.
//!
//! Exit status: 0 on success, 1 when a sentence or check fails, 2 for usage
//! and file errors.

use std::ffi::OsString;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{bench_csv, run_bench, run_corpus, BenchPlan, RunOptions};
use crate::check::check_instance;
use crate::config::DecoderConfig;
use crate::error::{Error, Result};
use crate::lmbr::{
    build_lmbr_matrix, compute_ngram_posteriors, read_evidence_file, EvidenceSpace, LmbrParams,
    WeightDomain,
};
use crate::scorer::{combine_ensemble, NgramCounts, NgramScorer, RecordedScorer, Scorer};
use crate::synthetic::ToyInstance;
use crate::vocab::{TokenId, Vocabulary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lmbr-beam", version, about = "Beam decoding with on-the-fly LMBR scores")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode a corpus, one sentence per line.
    Decode(DecodeArgs),
    /// Time decoding over beam sizes, beam batching modes and sentence batch sizes.
    Bench(BenchArgs),
    /// Compare the decoder against exhaustive search on random toy instances.
    OracleCheck(OracleArgs),
    /// Build or inspect LMBR matrices from an evidence file.
    #[command(subcommand)]
    Lmbr(LmbrCommand),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScorerSpec {
    Ngram(PathBuf),
    Recorded(PathBuf),
}

fn parse_scorer_spec(s: &str) -> std::result::Result<ScorerSpec, String> {
    match s.split_once(':') {
        Some(("ngram", p)) if !p.is_empty() => Ok(ScorerSpec::Ngram(p.into())),
        Some(("recorded", p)) if !p.is_empty() => Ok(ScorerSpec::Recorded(p.into())),
        _ => Err(format!("expected ngram:FILE or recorded:FILE, got {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    /// ngram:FILE or recorded:FILE; repeat for an ensemble.
    #[arg(long = "scorer", required = true, value_parser = parse_scorer_spec)]
    pub scorers: Vec<ScorerSpec>,
    #[arg(long)]
    pub input: PathBuf,
    /// JSON Lines evidence; `source_id` is the 0-based input line.
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    /// Evidence weights are natural-log scores.
    #[arg(long)]
    pub log_weights: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model score only; evidence is ignored.
    #[arg(long)]
    pub pure: bool,
    #[arg(long)]
    pub sort_by_length: bool,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sentences per batch; overrides the config file.
    #[arg(long)]
    pub batch_sentences: Option<usize>,
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    /// Worker threads over independent batches.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
    pub beams: Vec<usize>,
    /// Beam batching modes to run: on, off.
    #[arg(long, value_delimiter = ',', default_value = "on,off", value_parser = parse_mode)]
    pub modes: Vec<bool>,
    /// Sentence batch sizes.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sentences: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// CSV file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub cases: u64,
    /// Added to every Θ entry on the decoder side only.
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub corrupt_theta: f64,
}

#[derive(Subcommand, Debug)]
pub enum LmbrCommand {
    /// Write every source's matrix as one JSON line.
    Build(LmbrArgs),
    /// Print per-source posterior and matrix statistics as CSV.
    Inspect(LmbrArgs),
}

#[derive(Args, Debug)]
pub struct LmbrArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub evidence: PathBuf,
    #[arg(long)]
    pub log_weights: bool,
    /// Θ comes from here; defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Decode(a) => run_decode(&a, out, err),
        Command::Bench(a) => run_bench_command(&a, out, err),
        Command::OracleCheck(a) => run_oracle_check(&a, out, err),
        Command::Lmbr(LmbrCommand::Build(a)) => run_lmbr(&a, true, out),
        Command::Lmbr(LmbrCommand::Inspect(a)) => run_lmbr(&a, false, out),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> std::process::ExitCode {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::ExitCode::from(code as u8)
}

fn load_scorer(specs: &[ScorerSpec], vocab: &Vocabulary) -> Result<Box<dyn Scorer>> {
    let mut members: Vec<Box<dyn Scorer>> = Vec::with_capacity(specs.len());
    for spec in specs {
        members.push(match spec {
            ScorerSpec::Ngram(p) => {
                let counts = NgramCounts::load(p, vocab)?;
                let order = counts.max_order().max(1);
                Box::new(NgramScorer::new(&counts, order, vocab.len())?)
            }
            ScorerSpec::Recorded(p) => {
                let s = RecordedScorer::load(p)?;
                if s.vocab_size() != vocab.len() {
                    return Err(Error::Format(format!(
                        "{}: recorded vocab_size {} but the vocabulary has {} tokens",
                        p.display(),
                        s.vocab_size(),
                        vocab.len()
                    )));
                }
                Box::new(s)
            }
        });
    }
    if members.len() == 1 {
        Ok(members.pop().expect("one member"))
    } else {
        Ok(Box::new(combine_ensemble(members)?))
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    io::BufReader::new(file)
        .lines()
        .collect::<io::Result<_>>()
        .map_err(|e| Error::io(path, e))
}

fn domain(log_weights: bool) -> WeightDomain {
    if log_weights {
        WeightDomain::Log
    } else {
        WeightDomain::Linear
    }
}

/// Everything a decode or bench run needs, loaded up front.
struct Prepared {
    vocab: Vocabulary,
    scorer: Box<dyn Scorer>,
    cfg: DecoderConfig,
    lines: usize,
    /// Per input line: the encoded sentence and its evidence, or why it
    /// cannot be decoded.
    sentences: Vec<std::result::Result<(Vec<TokenId>, Option<EvidenceSpace>), Error>>,
    with_evidence: bool,
}

fn prepare(m: &ModelArgs, err: &mut dyn Write) -> Result<Prepared> {
    let vocab = Vocabulary::load(&m.vocab)?;
    let scorer = load_scorer(&m.scorers, &vocab)?;
    let cfg = match &m.config {
        Some(p) => DecoderConfig::load(p)?,
        None => DecoderConfig::default(),
    };
    cfg.validate()?;
    let lines = read_lines(&m.input)?;

    let mut evidence: Vec<Option<EvidenceSpace>> = vec![None; lines.len()];
    let with_evidence = match (&m.evidence, m.pure) {
        (Some(_), true) => {
            let _ = writeln!(err, "warning: --pure given, ignoring --evidence");
            false
        }
        (Some(p), false) => {
            for (id, space) in read_evidence_file(p, &vocab, domain(m.log_weights))? {
                let slot = evidence.get_mut(id as usize).ok_or_else(|| {
                    Error::Format(format!(
                        "{}: source_id {id} but the input has {} lines",
                        p.display(),
                        lines.len()
                    ))
                })?;
                space.check_vocab(scorer.vocab_size())?;
                *slot = Some(space);
            }
            true
        }
        (None, _) => false,
    };

    let sentences = lines
        .iter()
        .zip(evidence)
        .enumerate()
        .map(|(i, (line, ev))| {
            let words: Vec<&str> = line.split_whitespace().collect();
            let src = vocab.encode(&words)?;
            if with_evidence && ev.is_none() {
                return Err(Error::Contract(format!("no evidence for source {i}")));
            }
            Ok((src, ev))
        })
        .collect();
    Ok(Prepared {
        vocab,
        scorer,
        cfg,
        lines: lines.len(),
        sentences,
        with_evidence,
    })
}

fn open_output(path: Option<&Path>) -> Result<Option<io::BufWriter<std::fs::File>>> {
    path.map(|p| {
        std::fs::File::create(p)
            .map(io::BufWriter::new)
            .map_err(|e| Error::io(p, e))
    })
    .transpose()
}

fn run_decode(a: &DecodeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut p = prepare(&a.model, err)?;
    if let Some(n) = a.batch_sentences {
        p.cfg.sentence_batch = n;
    }
    p.cfg.validate()?;
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be >= 1".into()));
    }

    let mut good = Vec::new();
    let mut corpus = Vec::new();
    let mut evidence = Vec::new();
    let mut lines: Vec<std::result::Result<String, String>> = Vec::with_capacity(p.lines);
    for (i, s) in p.sentences.into_iter().enumerate() {
        match s {
            Ok((src, ev)) => {
                good.push(i);
                corpus.push(src);
                evidence.extend(ev);
                lines.push(Ok(String::new()));
            }
            Err(e) => lines.push(Err(e.to_string())),
        }
    }
    let opts = RunOptions {
        batch_sentences: p.cfg.sentence_batch,
        sort_by_length: a.model.sort_by_length,
        jobs: a.jobs,
    };
    let ev = p.with_evidence.then_some(&evidence[..]);
    let run = run_corpus(&corpus, p.scorer.as_ref(), ev, &p.cfg, &opts)?;
    for (&i, r) in good.iter().zip(&run.results) {
        lines[i] = match r {
            Ok(d) => Ok(p.vocab.detokenize(&d.tokens)),
            Err(e) => Err(e.to_string()),
        };
    }

    let mut file = open_output(a.output.as_deref())?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => out,
    };
    let mut failed = 0;
    for (i, l) in lines.iter().enumerate() {
        let text = match l {
            Ok(t) => t.as_str(),
            Err(e) => {
                failed += 1;
                let _ = writeln!(err, "sentence {i}: {e}");
                ""
            }
        };
        writeln!(sink, "{text}").map_err(|e| Error::io(a.output.as_deref().unwrap_or(Path::new("-")), e))?;
    }
    sink.flush().map_err(|e| Error::io(a.output.as_deref().unwrap_or(Path::new("-")), e))?;

    if let Some(path) = &a.stats_out {
        let json = serde_json::to_string_pretty(&run.stats)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(if failed > 0 { EXIT_FAILURE } else { EXIT_OK })
}

fn run_bench_command(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let p = prepare(&a.model, err)?;
    let mut corpus = Vec::new();
    let mut evidence = Vec::new();
    for (i, s) in p.sentences.into_iter().enumerate() {
        let (src, ev) = s.map_err(|e| Error::Format(format!("input line {}: {e}", i + 1)))?;
        corpus.push(src);
        evidence.extend(ev);
    }
    let plan = BenchPlan {
        beams: a.beams.clone(),
        modes: a.modes.clone(),
        sentences: a.sentences.clone(),
        repeat: a.repeat,
        sort_by_length: a.model.sort_by_length,
    };
    if plan.beams.contains(&0) || plan.sentences.contains(&0) {
        return Err(Error::Config("beam sizes and sentence counts must be >= 1".into()));
    }
    let ev = p.with_evidence.then_some(&evidence[..]);
    let rows = match run_bench(&corpus, &p.scorer, ev, &p.cfg, &plan) {
        Ok(rows) => rows,
        Err(e @ (Error::Config(_) | Error::Format(_))) => return Err(e),
        Err(e) => {
            let _ = writeln!(err, "bench failed: {e}");
            return Ok(EXIT_FAILURE);
        }
    };
    let csv = bench_csv(&rows);
    match a.output.as_deref() {
        Some(path) => std::fs::write(path, csv).map_err(|e| Error::io(path, e))?,
        None => out.write_all(csv.as_bytes()).map_err(|e| Error::io("-", e))?,
    }
    Ok(EXIT_OK)
}

fn run_oracle_check(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut passed = 0u64;
    let mut first_failure: Option<ToyInstance> = None;
    for i in 0..a.cases {
        let seed = a.seed.wrapping_add(i);
        let inst = ToyInstance::random(seed);
        match check_instance(&inst, a.corrupt_theta) {
            Ok(()) => {
                passed += 1;
                let _ = writeln!(out, "case {i} seed {seed}: pass");
            }
            Err(msg) => {
                let _ = writeln!(out, "case {i} seed {seed}: FAIL {msg}");
                first_failure.get_or_insert(inst);
            }
        }
    }
    let _ = writeln!(out, "{passed}/{} cases passed", a.cases);
    match first_failure {
        None => Ok(EXIT_OK),
        Some(inst) => {
            let _ = writeln!(err, "first failing case:\n{}", inst.to_json());
            Ok(EXIT_FAILURE)
        }
    }
}

#[derive(Serialize)]
struct MatrixDump {
    source_id: u64,
    vocab_size: usize,
    contexts: Vec<Vec<String>>,
    rows: Vec<Vec<f64>>,
    default_row: Vec<f64>,
}

fn run_lmbr(a: &LmbrArgs, build: bool, out: &mut dyn Write) -> Result<i32> {
    let vocab = Vocabulary::load(&a.vocab)?;
    let theta = match &a.config {
        Some(p) => DecoderConfig::load(p)?.theta,
        None => DecoderConfig::default().theta,
    };
    let spaces = read_evidence_file(&a.evidence, &vocab, domain(a.log_weights))?;
    let mut file = open_output(a.output.as_deref())?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => out,
    };
    let io_err = |e| Error::io(a.output.as_deref().unwrap_or(Path::new("-")), e);
    if !build {
        writeln!(sink, "source_id,hypotheses,ngrams,distinct_contexts,rows_built,sparse_updates").map_err(io_err)?;
    }
    for (id, space) in spaces {
        let post = compute_ngram_posteriors(&space);
        let m = build_lmbr_matrix(&post, &space, vocab.len(), &LmbrParams::new(theta))?;
        if build {
            let dump = MatrixDump {
                source_id: id,
                vocab_size: m.vocab_size(),
                contexts: m.contexts().iter().map(|c| vocab.decode(c)).collect::<Result<_>>()?,
                rows: (0..m.num_rows()).map(|r| m.row(r).to_vec()).collect(),
                default_row: m.default_row().to_vec(),
            };
            serde_json::to_writer(&mut *sink, &dump)?;
            writeln!(sink).map_err(io_err)?;
        } else {
            let s = m.stats();
            writeln!(
                sink,
                "{id},{},{},{},{},{}",
                space.len(),
                post.len(),
                s.distinct_contexts,
                m.rows_built(),
                s.sparse_updates
            )
            .map_err(io_err)?;
        }
    }
    sink.flush().map_err(io_err)?;
    Ok(EXIT_OK)
}
