use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

/// One line of an evidence file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub source_id: u64,
    pub weight: f64,
    pub tokens: Vec<String>,
}

/// How raw evidence weights are interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightDomain {
    #[default]
    Linear,
    /// Natural-log scores, exponentiated before normalization.
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Ends with EOS; never contains the start marker.
    pub tokens: Vec<TokenId>,
    pub weight: f64,
}

/// Weighted n-best list for one source sentence. Weights sum to one.
///
/// Hypotheses are kept in a canonical order (by tokens, then weight) so that
/// everything derived from the space is independent of input order, down to
/// the last bit of every floating point sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSpace {
    hypotheses: Vec<Hypothesis>,
}

impl EvidenceSpace {
    /// Validates and normalizes raw `(tokens, weight)` pairs. Linear weights
    /// must be non-negative and not all zero. EOS is appended when missing.
    pub fn new(raw: Vec<(Vec<TokenId>, f64)>, domain: WeightDomain) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Format("evidence block has no hypotheses".into()));
        }
        let mut hyps = Vec::with_capacity(raw.len());
        for (i, (mut tokens, weight)) in raw.into_iter().enumerate() {
            if !weight.is_finite() {
                return Err(Error::Format(format!("hypothesis {i}: weight {weight} is not finite")));
            }
            if domain == WeightDomain::Linear && weight < 0.0 {
                return Err(Error::Format(format!("hypothesis {i}: negative weight {weight}")));
            }
            if tokens.contains(&TokenId::START) {
                return Err(Error::Format(format!("hypothesis {i}: contains the start marker")));
            }
            if tokens.last() != Some(&TokenId::EOS) {
                tokens.push(TokenId::EOS);
            }
            if tokens[..tokens.len() - 1].contains(&TokenId::EOS) {
                return Err(Error::Format(format!("hypothesis {i}: EOS before the end")));
            }
            hyps.push(Hypothesis { tokens, weight });
        }
        hyps.sort_by(|a, b| {
            a.tokens
                .cmp(&b.tokens)
                .then(a.weight.total_cmp(&b.weight))
        });
        if domain == WeightDomain::Log {
            let max = hyps.iter().map(|h| h.weight).fold(f64::NEG_INFINITY, f64::max);
            for h in &mut hyps {
                h.weight = (h.weight - max).exp();
            }
        }
        let total: f64 = hyps.iter().map(|h| h.weight).sum();
        if total <= 0.0 {
            return Err(Error::Format("evidence weights are all zero".into()));
        }
        for h in &mut hyps {
            h.weight /= total;
        }
        Ok(Self { hypotheses: hyps })
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn check_vocab(&self, vocab_size: usize) -> Result<()> {
        for h in &self.hypotheses {
            crate::scorer::check_tokens(&h.tokens, vocab_size)?;
        }
        Ok(())
    }
}

/// Builds the evidence space of one source from its records.
pub fn load_evidence(
    records: &[EvidenceRecord],
    vocab: &Vocabulary,
    domain: WeightDomain,
) -> Result<EvidenceSpace> {
    let raw = records
        .iter()
        .map(|r| Ok((vocab.encode(&r.tokens)?, r.weight)))
        .collect::<Result<Vec<_>>>()?;
    EvidenceSpace::new(raw, domain)
}

/// Parses a JSON Lines evidence stream into per-source spaces, in file order.
/// Records of one source must be contiguous.
pub fn parse_evidence_file(
    reader: impl BufRead,
    vocab: &Vocabulary,
    domain: WeightDomain,
) -> Result<Vec<(u64, EvidenceSpace)>> {
    let mut blocks: Vec<(u64, Vec<EvidenceRecord>)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(format!("evidence line {}: {e}", lineno + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EvidenceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("evidence line {}: {e}", lineno + 1)))?;
        match blocks.last_mut() {
            Some((id, recs)) if *id == rec.source_id => recs.push(rec),
            _ => {
                if blocks.iter().any(|(id, _)| *id == rec.source_id) {
                    return Err(Error::Format(format!(
                        "evidence line {}: records for source {} are not contiguous",
                        lineno + 1,
                        rec.source_id
                    )));
                }
                blocks.push((rec.source_id, vec![rec]));
            }
        }
    }
    blocks
        .into_iter()
        .map(|(id, recs)| {
            load_evidence(&recs, vocab, domain)
                .map(|e| (id, e))
                .map_err(|e| Error::Format(format!("evidence for source {id}: {e}")))
        })
        .collect()
}

pub fn read_evidence_file(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    domain: WeightDomain,
) -> Result<Vec<(u64, EvidenceSpace)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_evidence_file(std::io::BufReader::new(file), vocab, domain)
}
