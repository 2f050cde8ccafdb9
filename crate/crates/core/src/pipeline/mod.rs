//! Corpus machinery: vocabulary training, shard encoding and statistics.

mod corpus;
mod density;
pub mod shard;
mod stats;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use corpus::{
    encode_corpus, is_special, load_vocab_dir, parse_input, read_input, read_shard_dir, shard_file_name,
    train_vocab, vocab_file_name, vocab_set_hash, EncodeConfig, EncodedCorpus, FailureCounts, FailureRecord,
    Framing, InputRecord, Manifest, ScaleSummary, ShardSummary, TrainConfig, TrainOutput, MANIFEST_FILE,
    MERGES_FILE,
};
pub use density::{supervision_density, DensityReport};
pub use shard::{ShardError, ShardReader, ShardRecord, TokenShard, CONCAT_VIEW};
pub use stats::{corpus_stats, CorpusStats, ViewStats};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Shard { path: PathBuf, source: ShardError },
    #[error(transparent)]
    Vocab(#[from] crate::vocab::VocabError),
    #[error(transparent)]
    Encode(#[from] crate::encoder::EncodeError),
    #[error("shards were written with different vocabularies")]
    VocabMismatch,
    #[error("{0}")]
    InvalidArgument(String),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_owned(), source }
    }
}
