//! Molecular similarity: circular fingerprints, Tanimoto, Murcko scaffolds,
//! string similarity and maximum common substructure.

mod fingerprint;
mod mcs;
mod murcko;

use thiserror::Error;

pub use fingerprint::{circular_fingerprint, fnv1a64, tanimoto, FingerprintBits, DEFAULT_NBITS, DEFAULT_RADIUS};
pub use mcs::{mcs, McsOptions, McsResult};
pub use murcko::{generic_murcko_scaffold, murcko_scaffold};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilError {
    #[error("fingerprint width {0} is not a power of two")]
    NbitsNotPowerOfTwo(usize),
    #[error("fingerprint widths differ ({a} vs {b})")]
    WidthMismatch { a: usize, b: usize },
}

/// 1 − edit distance / longer length, counted in characters; 1.0 for two
/// empty strings.
pub fn levenshtein_similarity(s1: &str, s2: &str) -> f64 {
    strsim::normalized_levenshtein(s1, s2)
}
