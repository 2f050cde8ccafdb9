//! Corpus input, vocabulary training and parallel shard encoding.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::shard::{label_mask, ShardRecord, TokenShard, CONCAT_VIEW};
use super::PipelineError;
use crate::encoder::{EncodeError, Encoder};
use crate::molgraph::{parse_smiles, MolError, MolGraph};
use crate::vocab::{default_savc, learn_merges, materialize_vocabs, MergeList, Vocabulary, BOS_ID, EOS_ID, SPECIAL_COUNT};

/// One input line: SMILES with an optional tab-separated id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputRecord {
    /// 1-based line number in the source file.
    pub line: usize,
    pub smiles: String,
    pub id: Option<String>,
}

/// Skips blank lines and `#` comments.
pub fn parse_input(text: &str) -> Vec<InputRecord> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                return None;
            }
            let mut parts = line.splitn(2, '\t');
            let smiles = parts.next().unwrap_or("").trim().to_owned();
            let id = parts.next().map(|s| s.trim().to_owned()).filter(|s| !s.is_empty());
            Some(InputRecord { line: i + 1, smiles, id })
        })
        .collect()
}

pub fn read_input(path: &Path) -> Result<Vec<InputRecord>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(parse_input(&text))
}

fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub k: usize,
    pub f_min: u64,
    pub prefixes: Vec<usize>,
    pub min_motif_freq: u64,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub merges: MergeList,
    pub vocabularies: Vec<Vocabulary>,
    pub parse_failures: usize,
}

/// Learns one merge list and slices it at every prefix.
pub fn train_vocab(inputs: &[InputRecord], cfg: &TrainConfig) -> Result<TrainOutput, PipelineError> {
    if cfg.prefixes.is_empty() {
        return Err(PipelineError::InvalidArgument("at least one prefix is required".into()));
    }
    if cfg.prefixes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(crate::vocab::VocabError::UnorderedPrefixes.into());
    }
    let parsed: Vec<Result<MolGraph, _>> = inputs.par_iter().map(|r| parse_smiles(&r.smiles)).collect();
    let mut corpus = Vec::with_capacity(parsed.len());
    let mut parse_failures = 0;
    for (r, g) in inputs.iter().zip(parsed) {
        match g {
            Ok(g) => corpus.push(g),
            Err(e) => {
                warn!("line {}: {e}", r.line);
                parse_failures += 1;
            }
        }
    }
    let merges = learn_merges(&corpus, cfg.k, cfg.f_min);
    info!("learned {} of {} merge operations", merges.k_max, cfg.k);
    let vocabularies = materialize_vocabs(&corpus, &merges, &cfg.prefixes, &default_savc(), cfg.min_motif_freq)?;
    Ok(TrainOutput { merges, vocabularies, parse_failures })
}

pub fn vocab_file_name(prefix_k: usize) -> String {
    format!("vocab_k{prefix_k}.json")
}

pub const MERGES_FILE: &str = "merges.json";
pub const MANIFEST_FILE: &str = "manifest.json";

impl TrainOutput {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let merges_path = dir.join(MERGES_FILE);
        std::fs::write(&merges_path, self.merges.to_json()).map_err(|e| PipelineError::io(&merges_path, e))?;
        let mut written = vec![merges_path];
        for v in &self.vocabularies {
            let path = dir.join(vocab_file_name(v.prefix_k));
            v.save(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Loads every `vocab_k*.json` in `dir`, ordered by prefix length.
pub fn load_vocab_dir(dir: &Path) -> Result<Vec<Vocabulary>, PipelineError> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("vocab_k") && name.ends_with(".json") {
            found.push(Vocabulary::load(&path)?);
        }
    }
    if found.is_empty() {
        return Err(PipelineError::InvalidArgument(format!("no vocab_k*.json files in {}", dir.display())));
    }
    found.sort_by_key(|v| v.prefix_k);
    Ok(found)
}

/// SHA-256 over the vocabulary JSON documents in scale order.
pub fn vocab_set_hash(vocabs: &[Vocabulary]) -> [u8; 32] {
    let mut h = Sha256::new();
    for v in vocabs {
        h.update(v.to_json().as_bytes());
        h.update(b"\n");
    }
    h.finalize().into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    /// Single-scale views wrapped as `[BOS] X [EOS]`.
    #[default]
    BosEos,
    /// Single-scale views stored bare.
    None,
}

#[derive(Clone, Debug)]
pub struct EncodeConfig {
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    /// Molecules per shard file.
    pub shard_molecules: usize,
    pub framing: Framing,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        EncodeConfig { workers: 0, shard_molecules: 10_000, framing: Framing::BosEos }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub parse_errors: usize,
    pub multi_fragment: usize,
    pub other: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub view: u8,
    pub prefix_k: usize,
    pub scale: usize,
    pub tokens: u64,
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardSummary {
    pub file: String,
    pub sequences: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub vocab_hash: String,
    pub merge_list_hash: String,
    pub framing: Framing,
    pub molecules_in: usize,
    pub molecules_encoded: usize,
    pub sequences: usize,
    pub views_per_molecule: usize,
    pub atoms: u64,
    pub scales: Vec<ScaleSummary>,
    pub concat_tokens: u64,
    pub failure_counts: FailureCounts,
    pub failures: Vec<FailureRecord>,
    pub shards: Vec<ShardSummary>,
}

pub struct EncodedCorpus {
    pub shards: Vec<TokenShard>,
    pub manifest: Manifest,
}

pub fn shard_file_name(index: usize) -> String {
    format!("shard_{index:05}.bin")
}

/// Encodes every input molecule into M single-scale views plus the
/// concatenated view. Invalid and multi-fragment inputs are skipped and
/// recorded in the manifest. Output does not depend on `cfg.workers`.
pub fn encode_corpus(
    inputs: &[InputRecord],
    vocabs: &[Vocabulary],
    cfg: &EncodeConfig,
) -> Result<EncodedCorpus, PipelineError> {
    let encoder = Encoder::new(vocabs)?;
    if vocabs.len() >= CONCAT_VIEW as usize {
        return Err(PipelineError::InvalidArgument(format!("too many scales ({})", vocabs.len())));
    }
    let shard_molecules = cfg.shard_molecules.max(1);
    let framing = cfg.framing;
    let hash = vocab_set_hash(vocabs);

    let results: Vec<Result<Vec<ShardRecord>, MolError>> = run_in_pool(cfg.workers, || {
        inputs
            .par_iter()
            .map(|r| {
                let g = parse_smiles(&r.smiles)?;
                let enc = encoder.encode(&g).map_err(|e| match e {
                    EncodeError::Mol(m) => m,
                    other => panic!("encoder invariant violated: {other}"),
                })?;
                let m = enc.node_counts.len();
                Ok(enc
                    .views
                    .into_iter()
                    .enumerate()
                    .map(|(i, view)| {
                        let single = i < m;
                        let ids = if single && framing == Framing::BosEos {
                            let mut ids = Vec::with_capacity(view.token_ids.len() + 2);
                            ids.push(BOS_ID);
                            ids.extend_from_slice(&view.token_ids);
                            ids.push(EOS_ID);
                            ids
                        } else {
                            view.token_ids
                        };
                        ShardRecord {
                            view: if single { i as u8 } else { CONCAT_VIEW },
                            atom_count: enc.atom_count as u32,
                            node_count: if single { enc.node_counts[i] as u32 } else { 0 },
                            label_mask: label_mask(&ids, is_special),
                            token_ids: ids,
                        }
                    })
                    .collect())
            })
            .collect()
    })?;

    let mut manifest = Manifest {
        version: super::shard::SHARD_VERSION,
        vocab_hash: hex::encode(hash),
        merge_list_hash: vocabs[0].merge_list_hash.clone(),
        framing,
        molecules_in: inputs.len(),
        molecules_encoded: 0,
        sequences: 0,
        views_per_molecule: vocabs.len() + 1,
        atoms: 0,
        scales: vocabs
            .iter()
            .enumerate()
            .map(|(i, v)| ScaleSummary { view: i as u8, prefix_k: v.prefix_k, scale: v.scale, tokens: 0, nodes: 0 })
            .collect(),
        concat_tokens: 0,
        failure_counts: FailureCounts::default(),
        failures: Vec::new(),
        shards: Vec::new(),
    };
    let mut shards = Vec::new();
    let mut current = TokenShard::new(hash);
    let mut in_current = 0;
    for (r, res) in inputs.iter().zip(results) {
        match res {
            Ok(records) => {
                manifest.molecules_encoded += 1;
                manifest.atoms += u64::from(records[0].atom_count);
                for rec in &records {
                    let tokens = rec.label_mask.iter().filter(|&&t| t).count() as u64;
                    if rec.view == CONCAT_VIEW {
                        manifest.concat_tokens += tokens;
                    } else {
                        let s = &mut manifest.scales[rec.view as usize];
                        s.tokens += tokens;
                        s.nodes += u64::from(rec.node_count);
                    }
                }
                manifest.sequences += records.len();
                current.records.extend(records);
                in_current += 1;
                if in_current == shard_molecules {
                    shards.push(std::mem::replace(&mut current, TokenShard::new(hash)));
                    in_current = 0;
                }
            }
            Err(e) => {
                match e {
                    MolError::Smiles(_) => manifest.failure_counts.parse_errors += 1,
                    MolError::MultiFragment { .. } => manifest.failure_counts.multi_fragment += 1,
                    _ => manifest.failure_counts.other += 1,
                }
                warn!("line {}: {e}", r.line);
                manifest.failures.push(FailureRecord { line: r.line, reason: e.to_string() });
            }
        }
    }
    if in_current > 0 || shards.is_empty() {
        shards.push(current);
    }
    for (i, shard) in shards.iter().enumerate() {
        manifest.shards.push(ShardSummary {
            file: shard_file_name(i),
            sequences: shard.records.len(),
            sha256: hex::encode(Sha256::digest(shard.to_bytes())),
        });
    }
    Ok(EncodedCorpus { shards, manifest })
}

pub fn is_special(id: u32) -> bool {
    id < SPECIAL_COUNT
}

impl EncodedCorpus {
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        for (shard, summary) in self.shards.iter().zip(&self.manifest.shards) {
            let path = dir.join(&summary.file);
            shard.write(&path).map_err(|e| PipelineError::io(&path, e))?;
        }
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    }
}

/// Reads every `shard_*.bin` in `dir` in file-name order.
pub fn read_shard_dir(dir: &Path) -> Result<Vec<TokenShard>, PipelineError> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("shard_") && name.ends_with(".bin") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(&p).map_err(|e| PipelineError::io(&p, e))?;
            TokenShard::from_bytes(&bytes).map_err(|source| PipelineError::Shard { path: p.clone(), source })
        })
        .collect()
}
