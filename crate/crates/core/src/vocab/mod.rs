//! Merge-list learning, single-atom closure and vocabulary materialization.

mod savc;
mod vocabulary;

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap, HashSet};

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoder::MergeState;
use crate::molgraph::{canonicalize, MolGraph};

pub use savc::{build_savc, default_savc, default_valence_table, ValenceTable, DEFAULT_ELEMENTS};
pub use vocabulary::{
    backoff_lookup, materialize_vocab, materialize_vocabs, MotifToken, TokenKind, Vocabulary, BOS_ID, CONCAT_ID,
    EOS_ID, SPECIAL_COUNT, UNK_ID,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("element {0} has no entry in the valence table")]
    MissingValence(String),
    #[error("prefix {k} exceeds the {available} learned merge operations")]
    PrefixTooLong { k: usize, available: usize },
    #[error("prefixes must be strictly ascending")]
    UnorderedPrefixes,
    #[error("vocabulary file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeOp {
    /// Connection-aware code of the two-node union this operation merges.
    pub code: String,
    /// Edge count of `code` when the operation was selected.
    #[serde(rename = "frequency")]
    pub learned_frequency: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeList {
    pub version: u32,
    /// Number of operations actually learned.
    pub k_max: usize,
    /// Iteration budget the list was learned with.
    pub k_requested: usize,
    pub f_min: u64,
    /// SHA-256 over the sorted canonical SMILES of the training corpus.
    pub corpus_id: String,
    pub ops: Vec<MergeOp>,
}

impl MergeList {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("merge list serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the serialized list; vocabularies record it so
    /// encoders can refuse to mix scales from different lists.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn prefix(&self, k: usize) -> Result<&[MergeOp], VocabError> {
        self.ops.get(..k).ok_or(VocabError::PrefixTooLong { k, available: self.ops.len() })
    }
}

/// Canonicalizes graphs that lack ranks and drops multi-fragment ones.
pub(crate) fn prepare_corpus(corpus: &[MolGraph]) -> Vec<(Cow<'_, MolGraph>, String)> {
    corpus
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| match canonicalize(g) {
            Ok((cg, smiles)) => {
                let g = if g.canonical_ranks().is_some() { Cow::Borrowed(g) } else { Cow::Owned(cg) };
                Some((g, smiles))
            }
            Err(e) => {
                warn!("corpus molecule {i} skipped: {e}");
                None
            }
        })
        .collect()
}

pub(crate) fn corpus_id<'a>(smiles: impl Iterator<Item = &'a str>) -> String {
    let mut sorted: Vec<&str> = smiles.collect();
    sorted.sort_unstable();
    let mut hasher = Sha256::new();
    for s in sorted {
        hasher.update(s.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Learns up to `k` merge operations.
///
/// Each round picks the edge code with the highest count, ties going to the
/// lexicographically greater code, stopping once the best count falls below
/// `f_min` (values below 1 are treated as 1). The chosen code is applied to
/// every molecule and then retired: it is never selected again, even if
/// later merges recreate edges with the same code. Counts are exact edge
/// counts over the current partitions.
pub fn learn_merges(corpus: &[MolGraph], k: usize, f_min: u64) -> MergeList {
    let f_min = f_min.max(1);
    let prepared = prepare_corpus(corpus);
    let corpus_id = corpus_id(prepared.iter().map(|(_, s)| s.as_str()));
    let mut states: Vec<MergeState<'_>> = prepared.par_iter().map(|(g, _)| MergeState::new(g, None)).collect();

    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut holders: HashMap<String, Vec<usize>> = HashMap::new();
    for (m, state) in states.iter().enumerate() {
        for code in state.edge_codes() {
            *counts.entry(code.to_owned()).or_default() += 1;
            let list = holders.entry(code.to_owned()).or_default();
            if list.last() != Some(&m) {
                list.push(m);
            }
        }
    }
    let mut ranking: BTreeSet<(u64, String)> = counts.iter().map(|(c, &n)| (n, c.clone())).collect();
    let mut retired: HashSet<String> = HashSet::new();
    let mut ops = Vec::new();

    for t in 0..k {
        let Some((count, code)) = ranking.last().cloned() else { break };
        if count < f_min {
            break;
        }
        ranking.remove(&(count, code.clone()));
        counts.remove(&code);
        retired.insert(code.clone());
        debug!("merge {t}: {code} ({count})");

        let mut targets = holders.remove(&code).unwrap_or_default();
        targets.sort_unstable();
        targets.dedup();
        let mut selected = vec![false; states.len()];
        for &m in &targets {
            selected[m] = true;
        }
        let deltas: Vec<(usize, Vec<(String, i32)>)> = states
            .par_iter_mut()
            .enumerate()
            .filter(|(m, _)| selected[*m])
            .map(|(m, state)| (m, state.apply_code(t, &code)))
            .collect();
        for (m, delta) in deltas {
            for (c, d) in delta {
                if retired.contains(&c) {
                    continue;
                }
                let entry = counts.entry(c.clone()).or_default();
                if *entry > 0 {
                    ranking.remove(&(*entry, c.clone()));
                }
                if d > 0 {
                    *entry += d as u64;
                    let list = holders.entry(c.clone()).or_default();
                    if list.last() != Some(&m) {
                        list.push(m);
                    }
                } else {
                    *entry -= (-d) as u64;
                }
                if *entry > 0 {
                    ranking.insert((*entry, c));
                } else {
                    counts.remove(&c);
                }
            }
        }
        ops.push(MergeOp { code, learned_frequency: count });
    }

    MergeList { version: FORMAT_VERSION, k_max: ops.len(), k_requested: k, f_min, corpus_id, ops }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{fragment_code, parse_smiles};

    fn corpus(smiles: &[&str]) -> Vec<MolGraph> {
        smiles.iter().map(|s| parse_smiles(s).unwrap()).collect()
    }

    #[test]
    fn zero_iterations() {
        let list = learn_merges(&corpus(&["CCO"]), 0, 1);
        assert!(list.ops.is_empty());
        assert_eq!(list.k_max, 0);
    }

    #[test]
    fn isolated_atoms_have_no_pairs() {
        let list = learn_merges(&corpus(&["C", "O", "[Na+]"]), 10, 1);
        assert!(list.ops.is_empty());
    }

    #[test]
    fn ethanol_copies() {
        let copies = vec!["CCO"; 10];
        let list = learn_merges(&corpus(&copies), 5, 1);
        let g = canonicalize(&parse_smiles("CCO").unwrap()).unwrap().0;
        let cc = fragment_code(&g, &[0, 1], true).unwrap();
        let co = fragment_code(&g, &[1, 2], true).unwrap();
        let (first, second) = if cc > co { (cc, co) } else { (co, cc) };
        assert_eq!(list.ops[0], MergeOp { code: first.clone(), learned_frequency: 10 });
        // after the first merge the remaining pair is the whole molecule
        assert_eq!(list.ops.len(), 2);
        assert_ne!(list.ops[1].code, second, "second op is the union with the merged node");
        assert_eq!(list.ops[1].code, "CCO");
        assert_eq!(list.ops[1].learned_frequency, 10);
    }

    #[test]
    fn f_min_stops_learning() {
        let list = learn_merges(&corpus(&["CCO", "CCO", "CN"]), 10, 3);
        assert!(list.ops.iter().all(|op| op.learned_frequency >= 3));
        assert_eq!(list.ops.len(), 0);
        let list = learn_merges(&corpus(&["CCO", "CCO", "CN"]), 10, 2);
        assert!(!list.ops.is_empty());
        assert!(list.ops.iter().all(|op| op.learned_frequency >= 2));
    }

    #[test]
    fn merge_list_json_round_trip() {
        let list = learn_merges(&corpus(&["c1ccccc1O", "CC(=O)O", "CCN"]), 20, 1);
        let text = list.to_json();
        assert_eq!(MergeList::from_json(&text).unwrap(), list);
        assert_eq!(list.hash(), MergeList::from_json(&text).unwrap().hash());
    }

    #[test]
    fn input_order_does_not_matter() {
        let a = learn_merges(&corpus(&["c1ccccc1O", "CC(=O)O", "CCN", "OCCO"]), 20, 1);
        let b = learn_merges(&corpus(&["OCCO", "CCN", "OC(C)=O", "Oc1ccccc1"]), 20, 1);
        assert_eq!(a, b);
    }
}
