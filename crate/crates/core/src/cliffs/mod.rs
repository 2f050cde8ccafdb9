//! Activity-cliff pairs, shared/differential fragment labels and
//! differential-token attention statistics.

mod dtap;
mod labels;
mod pairs;

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dtap::{
    aggregate_dtap, attention_key, read_attention_jsonl, rel_dtap, run_dtap, AttentionMode, AttentionRecord,
    DtapOptions, DtapReport, DtapSummary, RegionDtap, RegionSummary, DEFAULT_EPSILON,
};
pub use labels::{fragment_labels, label_fragments, token_diff_mask, FragmentLabels};
pub use pairs::{
    attach_labels, find_cliff_pairs, fold_change, passes_filter, read_pairs_csv, select_cases, write_pairs_csv,
    CaseMode, CliffConfig, CliffPair, PairRow,
};

#[derive(Debug, Error)]
pub enum CliffError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },
    #[error("attention has {got} weights, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("attention weight {index} is negative or not finite")]
    InvalidWeight { index: usize },
    #[error("region {start}..{end} exceeds {len} tokens")]
    RegionOutOfRange { start: usize, end: usize, len: usize },
    #[error("attention line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Encode(#[from] crate::encoder::EncodeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One row of a benchmark activity table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub smiles: String,
    /// Linear potency in nM.
    #[serde(rename = "exp_mean [nM]")]
    pub exp_mean_nm: f64,
    pub cliff_mol: u8,
    pub split: Split,
}

/// Reads `smiles`, `exp_mean [nM]`, `cliff_mol` and `split` columns; any
/// other columns are ignored.
pub fn read_activity_csv(reader: impl Read) -> Result<Vec<ActivityRecord>, CliffError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<ActivityRecord>().enumerate() {
        let rec = row?;
        let row = i + 2;
        if !(rec.exp_mean_nm > 0.0 && rec.exp_mean_nm.is_finite()) {
            return Err(CliffError::InvalidRecord { row, reason: format!("potency {} is not positive", rec.exp_mean_nm) });
        }
        if rec.cliff_mol > 1 {
            return Err(CliffError::InvalidRecord { row, reason: format!("cliff_mol must be 0 or 1, got {}", rec.cliff_mol) });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_activity_file(path: &Path) -> Result<Vec<ActivityRecord>, CliffError> {
    let file = std::fs::File::open(path).map_err(|source| CliffError::Io { path: path.to_owned(), source })?;
    read_activity_csv(file)
}
