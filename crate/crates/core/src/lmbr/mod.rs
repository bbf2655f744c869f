//! Lattice-MBR n-gram posteriors and the history-keyed score matrix.
//!
//! Evidence (a weighted n-best list) is reduced to n-gram posteriors of
//! orders 1..=4. Those are laid out as a matrix with one row per n-gram
//! history seen in the evidence, so that the decoder can add LMBR scores for
//! a whole beam with one row fetch per hypothesis.

mod evidence;
mod matrix;
mod posteriors;

pub use evidence::{
    load_evidence, parse_evidence_file, read_evidence_file, EvidenceRecord, EvidenceSpace,
    Hypothesis, WeightDomain,
};
pub use matrix::{build_lmbr_matrix, BuildStats, LmbrMatrix, LmbrParams};
pub use posteriors::{compute_ngram_posteriors, start_padded, NgramPosteriorTable};

/// Highest n-gram order carrying a posterior weight.
pub const MAX_ORDER: usize = 4;
/// Longest history that selects a matrix row.
pub const MAX_CONTEXT: usize = MAX_ORDER - 1;
