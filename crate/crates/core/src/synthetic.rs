//! Seeded generators: toy oracle instances, random evidence spaces and a
//! synthetic translation workload (vocabulary, n-gram counts, corpus,
//! n-best evidence) for benchmarks and end-to-end tests.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DecoderConfig, Lambda};
use crate::error::{Error, Result};
use crate::lmbr::{EvidenceRecord, EvidenceSpace, WeightDomain};
use crate::scorer::{NgramCounts, RecordedScorer};
use crate::vocab::{TokenId, Vocabulary, EOS_SYMBOL, START_SYMBOL};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
    for x in logits.iter_mut() {
        *x -= z;
    }
}

/// Recorded scorer whose step `t` has `V^(t-1)` rows, so every prefix gets
/// its own distribution.
pub fn random_recorded(rng: &mut impl Rng, vocab_size: usize, steps: usize) -> RecordedScorer {
    let mut matrices = Vec::with_capacity(steps);
    let mut rows = 1usize;
    for _ in 0..steps {
        let m = (0..rows)
            .map(|_| {
                let mut r: Vec<f64> = (0..vocab_size).map(|_| rng.gen_range(-3.0..3.0)).collect();
                log_softmax(&mut r);
                r
            })
            .collect();
        matrices.push(m);
        rows *= vocab_size;
    }
    RecordedScorer::new(vocab_size, matrices).expect("generated matrices are well formed")
}

/// `1..=max_hyps` hypotheses over the word ids `2..vocab_size`, each of
/// `0..=max_len` words, with positive linear weights.
pub fn random_evidence(
    rng: &mut impl Rng,
    vocab_size: usize,
    min_hyps: usize,
    max_hyps: usize,
    max_len: usize,
) -> EvidenceSpace {
    let n = rng.gen_range(min_hyps..=max_hyps);
    let raw = (0..n)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let toks = (0..len)
                .map(|_| TokenId(rng.gen_range(2..vocab_size as u32)))
                .collect();
            (toks, rng.gen_range(0.05..1.0))
        })
        .collect();
    EvidenceSpace::new(raw, WeightDomain::Linear).expect("generated evidence is well formed")
}

/// Small exhaustively searchable decoding problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyInstance {
    pub seed: u64,
    pub vocab_size: usize,
    pub steps: usize,
    pub source: Vec<TokenId>,
    pub scorer: RecordedScorer,
    pub evidence: EvidenceSpace,
    pub theta: [f64; 5],
    pub lambda: f64,
    pub length_norm: bool,
}

impl ToyInstance {
    /// V in {3, 4}, T in 1..=4, 2-5 evidence hypotheses, Θ in [0,1]^5 and
    /// λ in {0.25, 0.5, 1}.
    pub fn random(seed: u64) -> Self {
        let mut r = rng(seed);
        let vocab_size = r.gen_range(3..=4);
        let steps = r.gen_range(1..=4);
        let scorer = random_recorded(&mut r, vocab_size, steps);
        let evidence = random_evidence(&mut r, vocab_size, 2, 5, steps);
        let mut theta = [0.0; 5];
        for x in &mut theta {
            *x = r.gen_range(0.0..=1.0);
        }
        let lambda = *[0.25, 0.5, 1.0].choose(&mut r).unwrap();
        Self {
            seed,
            vocab_size,
            steps,
            source: vec![TokenId(2)],
            scorer,
            evidence,
            theta,
            lambda,
            length_norm: r.gen_bool(0.5),
        }
    }

    /// Beam of `V^T`, no pruning, and a step limit of exactly `T`.
    pub fn config(&self) -> DecoderConfig {
        DecoderConfig {
            beam_size: self.vocab_size.pow(self.steps as u32),
            lambda: Lambda::Fixed(self.lambda),
            theta: self.theta,
            length_norm: self.length_norm,
            prune_width: 0.0,
            max_steps_slope: 1.0,
            max_steps_offset: (self.steps - 1) as f64,
            sentence_batch: 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("toy instances serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub sentences: usize,
    /// Word types, excluding the two reserved symbols.
    pub words: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub training_sentences: usize,
    pub order: usize,
    /// Hypotheses per evidence block; 0 for no evidence.
    pub nbest: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            sentences: 100,
            words: 60,
            min_len: 3,
            max_len: 12,
            training_sentences: 400,
            order: 3,
            nbest: 20,
        }
    }
}

/// Vocabulary, n-gram counts, a source corpus and one evidence space per
/// sentence, all drawn from one sparse Markov chain over words.
#[derive(Clone, Debug)]
pub struct Workload {
    pub vocab: Vocabulary,
    pub counts: NgramCounts,
    pub order: usize,
    pub corpus: Vec<Vec<TokenId>>,
    pub evidence: Vec<EvidenceSpace>,
}

pub struct WorkloadFiles {
    pub vocab: PathBuf,
    pub counts: PathBuf,
    pub corpus: PathBuf,
    pub evidence: PathBuf,
}

struct Chain {
    /// successors[h] for h = START and every word; (word, weight)
    successors: Vec<Vec<(TokenId, f64)>>,
}

impl Chain {
    fn new(rng: &mut impl Rng, vocab_size: usize) -> Self {
        let words: Vec<TokenId> = (2..vocab_size as u32).map(TokenId).collect();
        let successors = (0..vocab_size)
            .map(|_| {
                let k = rng.gen_range(3..=6).min(words.len());
                words
                    .choose_multiple(rng, k)
                    .enumerate()
                    .map(|(i, &w)| (w, 1.0 / (i + 1) as f64))
                    .collect()
            })
            .collect();
        Self { successors }
    }

    fn next(&self, rng: &mut impl Rng, prev: TokenId) -> TokenId {
        let succ = &self.successors[prev.index()];
        let total: f64 = succ.iter().map(|s| s.1).sum();
        let mut x = rng.gen_range(0.0..total);
        for &(w, p) in succ {
            if x < p {
                return w;
            }
            x -= p;
        }
        succ[succ.len() - 1].0
    }

    fn sentence(&self, rng: &mut impl Rng, len: usize) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(len);
        let mut prev = TokenId::START;
        for _ in 0..len {
            prev = self.next(rng, prev);
            out.push(prev);
        }
        out
    }
}

/// Samples up to `n` distinct paths through a confusion network built
/// around `reference`: most positions are certain, some carry one or two
/// alternatives or an optional deletion. Path weight is the product of the
/// chosen arc probabilities.
fn confusion_nbest(
    rng: &mut impl Rng,
    chain: &Chain,
    reference: &[TokenId],
    n: usize,
) -> Vec<(Vec<TokenId>, f64)> {
    let mut slots: Vec<Vec<(Option<TokenId>, f64)>> = Vec::with_capacity(reference.len());
    let mut prev = TokenId::START;
    for &w in reference {
        let mut arcs = vec![(Some(w), 1.0)];
        if rng.gen_bool(0.4) {
            for _ in 0..rng.gen_range(1..=2) {
                let alt = chain.next(rng, prev);
                if arcs.iter().all(|a| a.0 != Some(alt)) {
                    arcs.push((Some(alt), rng.gen_range(0.1..0.6)));
                }
            }
        }
        if rng.gen_bool(0.1) {
            arcs.push((None, rng.gen_range(0.05..0.3)));
        }
        let total: f64 = arcs.iter().map(|a| a.1).sum();
        for a in &mut arcs {
            a.1 /= total;
        }
        slots.push(arcs);
        prev = w;
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n * 50 {
        if out.len() == n {
            break;
        }
        let mut toks = Vec::with_capacity(slots.len());
        let mut weight = 1.0;
        for arcs in &slots {
            let mut x = rng.gen_range(0.0..1.0);
            let mut pick = arcs[arcs.len() - 1];
            for &a in arcs {
                if x < a.1 {
                    pick = a;
                    break;
                }
                x -= a.1;
            }
            weight *= pick.1;
            toks.extend(pick.0);
        }
        if seen.insert(toks.clone()) {
            out.push((toks, weight));
        }
    }
    out
}

impl Workload {
    pub fn generate(spec: &WorkloadSpec) -> Result<Self> {
        if spec.words == 0 || spec.min_len == 0 || spec.min_len > spec.max_len || spec.order == 0 {
            return Err(Error::Config(format!("degenerate workload spec: {spec:?}")));
        }
        let mut r = rng(spec.seed);
        let vocab_size = spec.words + 2;
        let vocab = Vocabulary::new(
            [START_SYMBOL.to_string(), EOS_SYMBOL.to_string()]
                .into_iter()
                .chain((0..spec.words).map(|i| format!("w{i}"))),
        )?;
        let chain = Chain::new(&mut r, vocab_size);

        let mut counts = NgramCounts::new();
        for _ in 0..spec.training_sentences {
            let len = r.gen_range(spec.min_len..=spec.max_len);
            let mut s = vec![TokenId::START];
            s.extend(chain.sentence(&mut r, len));
            s.push(TokenId::EOS);
            for n in 1..=spec.order {
                for g in s.windows(n) {
                    counts.add(g, 1);
                }
            }
        }

        let mut corpus = Vec::with_capacity(spec.sentences);
        let mut evidence = Vec::new();
        for _ in 0..spec.sentences {
            let len = r.gen_range(spec.min_len..=spec.max_len);
            corpus.push(chain.sentence(&mut r, len));
            if spec.nbest > 0 {
                let tlen = (len as i64 + r.gen_range(-1..=1)).max(1) as usize;
                let reference = chain.sentence(&mut r, tlen);
                let nbest = confusion_nbest(&mut r, &chain, &reference, spec.nbest);
                evidence.push(EvidenceSpace::new(nbest, WeightDomain::Linear)?);
            }
        }
        Ok(Self {
            vocab,
            counts,
            order: spec.order,
            corpus,
            evidence,
        })
    }

    pub fn corpus_text(&self) -> String {
        let mut s = String::new();
        for sent in &self.corpus {
            s.push_str(&self.vocab.detokenize(sent));
            s.push('\n');
        }
        s
    }

    pub fn evidence_records(&self) -> Vec<EvidenceRecord> {
        let mut out = Vec::new();
        for (i, space) in self.evidence.iter().enumerate() {
            for h in space.hypotheses() {
                out.push(EvidenceRecord {
                    source_id: i as u64,
                    weight: h.weight,
                    tokens: self
                        .vocab
                        .decode(&h.tokens[..h.tokens.len() - 1])
                        .expect("evidence uses workload vocabulary"),
                });
            }
        }
        out
    }

    /// Writes `vocab.txt`, `counts.tsv`, `corpus.txt` and `evidence.jsonl`.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<WorkloadFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = WorkloadFiles {
            vocab: dir.join("vocab.txt"),
            counts: dir.join("counts.tsv"),
            corpus: dir.join("corpus.txt"),
            evidence: dir.join("evidence.jsonl"),
        };
        let mut vocab_text = self.vocab.tokens().join("\n");
        vocab_text.push('\n');
        write(&files.vocab, vocab_text.as_bytes())?;
        write(&files.counts, self.counts.to_text(&self.vocab).as_bytes())?;
        write(&files.corpus, self.corpus_text().as_bytes())?;
        let mut ev = Vec::new();
        for rec in self.evidence_records() {
            serde_json::to_writer(&mut ev, &rec)?;
            ev.push(b'\n');
        }
        write(&files.evidence, &ev)?;
        Ok(files)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}
