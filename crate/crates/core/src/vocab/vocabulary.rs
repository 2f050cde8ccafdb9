use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{prepare_corpus, MergeList, MergeOp, VocabError, FORMAT_VERSION};
use crate::encoder::MergeState;
use crate::molgraph::{Element, FragmentCoder, MolGraph};

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const CONCAT_ID: u32 = 2;
pub const UNK_ID: u32 = 3;
pub const SPECIAL_COUNT: u32 = 4;

const SPECIAL_NAMES: [&str; 4] = ["[BOS]", "[EOS]", "[CONCAT]", "[UNK]"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Motif,
    Sav,
    SavAltform,
    Special,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifToken {
    pub id: u32,
    pub kind: TokenKind,
    /// Canonical SMILES of the bare fragment.
    pub no_conn: String,
    /// Canonical SMILES with a `*` on every cut bond; the lookup key.
    pub with_conn: String,
}

/// Token table for one scale. Ids are assigned specials first, then the
/// single-atom closure in enumeration order, then mined motifs by
/// descending frequency (ascending code on ties).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub version: u32,
    pub prefix_k: usize,
    /// Number of non-special tokens.
    pub scale: usize,
    pub elements: Vec<String>,
    pub tokens: Vec<MotifToken>,
    /// The merge-list prefix this vocabulary was materialized with.
    pub merges: Vec<MergeOp>,
    pub merge_list_hash: String,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
    #[serde(skip)]
    altforms: HashMap<u8, u32>,
}

impl Vocabulary {
    fn assemble(
        prefix_k: usize,
        elements: Vec<String>,
        savc: &[MotifToken],
        motifs: Vec<(String, String, u64)>,
        merges: Vec<MergeOp>,
        merge_list_hash: String,
    ) -> Self {
        let mut tokens: Vec<MotifToken> = SPECIAL_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| MotifToken {
                id: i as u32,
                kind: TokenKind::Special,
                no_conn: (*name).to_owned(),
                with_conn: (*name).to_owned(),
            })
            .collect();
        let mut seen: HashMap<String, u32> = HashMap::new();
        for t in savc {
            if seen.contains_key(&t.with_conn) {
                continue;
            }
            let id = tokens.len() as u32;
            seen.insert(t.with_conn.clone(), id);
            tokens.push(MotifToken { id, ..t.clone() });
        }
        for (no_conn, with_conn, _) in motifs {
            if seen.contains_key(&with_conn) {
                continue;
            }
            let id = tokens.len() as u32;
            seen.insert(with_conn.clone(), id);
            tokens.push(MotifToken { id, kind: TokenKind::Motif, no_conn, with_conn });
        }
        let mut v = Vocabulary {
            version: FORMAT_VERSION,
            prefix_k,
            scale: tokens.len() - SPECIAL_COUNT as usize,
            elements,
            tokens,
            merges,
            merge_list_hash,
            lookup: HashMap::new(),
            altforms: HashMap::new(),
        };
        v.rebuild_index();
        v
    }

    fn rebuild_index(&mut self) {
        self.lookup.clear();
        self.altforms.clear();
        for t in &self.tokens {
            if t.kind == TokenKind::Special {
                continue;
            }
            self.lookup.insert(t.with_conn.clone(), t.id);
            if t.kind == TokenKind::SavAltform {
                let symbol = t.with_conn.trim_start_matches('[').trim_end_matches("_AltForm]");
                if let Some(e) = Element::from_symbol(symbol) {
                    self.altforms.insert(e.atomic_number(), t.id);
                }
            }
        }
    }

    pub fn id_of(&self, with_conn: &str) -> Option<u32> {
        self.lookup.get(with_conn).copied()
    }

    pub fn token(&self, id: u32) -> Option<&MotifToken> {
        self.tokens.get(id as usize)
    }

    pub fn altform_id(&self, element: Element) -> Option<u32> {
        self.altforms.get(&element.atomic_number()).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        let mut v: Vocabulary = serde_json::from_str(text)?;
        v.rebuild_index();
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<(), VocabError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Hex SHA-256 of the serialized vocabulary.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Exact code first; otherwise a single-atom motif falls back to its
/// element's alternate form, and anything else is `[UNK]`.
pub fn backoff_lookup(v: &Vocabulary, code: &str, core_atom_count: usize, element: Element) -> u32 {
    if let Some(id) = v.id_of(code) {
        return id;
    }
    if core_atom_count == 1 {
        if let Some(id) = v.altform_id(element) {
            return id;
        }
    }
    UNK_ID
}

/// Vocabulary at one prefix length; see [`materialize_vocabs`].
pub fn materialize_vocab(
    corpus: &[MolGraph],
    merges: &MergeList,
    k: usize,
    savc: &[MotifToken],
    min_motif_freq: u64,
) -> Result<Vocabulary, VocabError> {
    Ok(materialize_vocabs(corpus, merges, &[k], savc, min_motif_freq)?.remove(0))
}

/// Replays the merge list once per molecule, snapshotting at each prefix in
/// `prefixes` (strictly ascending), and builds one vocabulary per prefix
/// from the motifs seen at least `min_motif_freq` times.
pub fn materialize_vocabs(
    corpus: &[MolGraph],
    merges: &MergeList,
    prefixes: &[usize],
    savc: &[MotifToken],
    min_motif_freq: u64,
) -> Result<Vec<Vocabulary>, VocabError> {
    if prefixes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VocabError::UnorderedPrefixes);
    }
    if let Some(&last) = prefixes.last() {
        merges.prefix(last)?;
    }
    let prepared = prepare_corpus(corpus);
    let longest = prefixes.last().copied().unwrap_or(0);
    let op_ranks: HashMap<String, usize> =
        merges.ops[..longest].iter().enumerate().map(|(i, op)| (op.code.clone(), i)).collect();

    type Counts = Vec<HashMap<String, (String, u64)>>;
    let empty = || -> Counts { vec![HashMap::new(); prefixes.len()] };
    let counts: Counts = prepared
        .par_iter()
        .fold(empty, |mut acc, (g, _)| {
            let mut coder = FragmentCoder::new(g);
            MergeState::new(g, Some(&op_ranks)).run(prefixes, |i, bg| {
                for node in &bg.nodes {
                    let with_conn = coder.code(&node.atom_indices, true).expect("motifs are connected");
                    let entry = acc[i].entry(with_conn).or_insert_with(|| {
                        (coder.code(&node.atom_indices, false).expect("motifs are connected"), 0)
                    });
                    entry.1 += 1;
                }
            });
            acc
        })
        .reduce(empty, |mut a, b| {
            for (ma, mb) in a.iter_mut().zip(b) {
                for (code, (no_conn, n)) in mb {
                    ma.entry(code).or_insert((no_conn, 0)).1 += n;
                }
            }
            a
        });

    let elements: Vec<String> = {
        let mut seen = Vec::new();
        for t in savc {
            if t.kind == TokenKind::SavAltform {
                seen.push(t.with_conn.trim_start_matches('[').trim_end_matches("_AltForm]").to_owned());
            }
        }
        seen
    };
    let hash = merges.hash();
    Ok(prefixes
        .iter()
        .zip(counts)
        .map(|(&k, table)| {
            let mut motifs: Vec<(String, String, u64)> = table
                .into_iter()
                .filter(|(_, (_, n))| *n >= min_motif_freq)
                .map(|(with_conn, (no_conn, n))| (no_conn, with_conn, n))
                .collect();
            motifs.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.1.cmp(&b.1)));
            Vocabulary::assemble(k, elements.clone(), savc, motifs, merges.ops[..k].to_vec(), hash.clone())
        })
        .collect())
}
