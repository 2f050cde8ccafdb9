use serde::{Deserialize, Serialize};

use super::shard::{TokenShard, CONCAT_VIEW};
use super::PipelineError;
use crate::vocab::UNK_ID;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewStats {
    pub view: u8,
    pub sequences: u64,
    /// Non-special tokens.
    pub tokens: u64,
    pub mean_atoms: f64,
    pub mean_nodes: f64,
    /// Mean atom count over mean motif-node count; 1.0 for the atom-level
    /// partition.
    pub compression_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sequences: u64,
    pub views: Vec<ViewStats>,
    pub concat_sequences: u64,
    pub concat_tokens: u64,
    pub unk_count: u64,
}

pub fn corpus_stats(shards: &[TokenShard]) -> Result<CorpusStats, PipelineError> {
    #[derive(Default, Clone)]
    struct Acc {
        sequences: u64,
        tokens: u64,
        atoms: u64,
        nodes: u64,
    }
    let mut per_view: Vec<Acc> = Vec::new();
    let mut stats = CorpusStats { sequences: 0, views: Vec::new(), concat_sequences: 0, concat_tokens: 0, unk_count: 0 };
    if let Some(first) = shards.first() {
        if shards.iter().any(|s| s.vocab_hash != first.vocab_hash) {
            return Err(PipelineError::VocabMismatch);
        }
    }
    for rec in shards.iter().flat_map(|s| &s.records) {
        stats.sequences += 1;
        let targets = rec.label_mask.iter().filter(|&&t| t).count() as u64;
        stats.unk_count += rec.token_ids.iter().filter(|&&t| t == UNK_ID).count() as u64;
        if rec.view == CONCAT_VIEW {
            stats.concat_sequences += 1;
            stats.concat_tokens += targets;
            continue;
        }
        let v = rec.view as usize;
        if per_view.len() <= v {
            per_view.resize(v + 1, Acc::default());
        }
        let acc = &mut per_view[v];
        acc.sequences += 1;
        acc.tokens += targets;
        acc.atoms += u64::from(rec.atom_count);
        acc.nodes += u64::from(rec.node_count);
    }
    stats.views = per_view
        .into_iter()
        .enumerate()
        .filter(|(_, a)| a.sequences > 0)
        .map(|(v, a)| {
            let n = a.sequences as f64;
            let (mean_atoms, mean_nodes) = (a.atoms as f64 / n, a.nodes as f64 / n);
            ViewStats {
                view: v as u8,
                sequences: a.sequences,
                tokens: a.tokens,
                mean_atoms,
                mean_nodes,
                compression_ratio: if a.nodes == 0 { 0.0 } else { a.atoms as f64 / a.nodes as f64 },
            }
        })
        .collect();
    Ok(stats)
}
