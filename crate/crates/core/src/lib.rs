pub mod cliffs;
pub mod encoder;
pub mod molgraph;
pub mod pipeline;
pub mod simil;
pub mod synth;
pub mod vocab;

pub use encoder::{
    apply_merges, encode_explain, encode_multiscale, encode_scale, resolve_tokens, scaffold_bfs, BpeGraph, BpeNode,
    CamsSequence, EncodeError, Encoder, ExplainEncoding, MergeTreeNode, MultiScaleEncoding, SequenceKind,
};
pub use molgraph::{
    canonical_smiles, canonicalize, fragment_code, parse_smiles, Atom, Bond, BondOrder, Element, FragmentCoder,
    MolError, MolGraph, SmilesError,
};
pub use vocab::{
    backoff_lookup, build_savc, default_savc, learn_merges, materialize_vocab, materialize_vocabs, MergeList, MergeOp,
    MotifToken, TokenKind, VocabError, Vocabulary,
};
pub use pipeline::{
    corpus_stats, encode_corpus, supervision_density, train_vocab, CorpusStats, DensityReport, EncodeConfig, Manifest,
    PipelineError, ShardRecord, TokenShard, TrainConfig,
};
pub use simil::{
    circular_fingerprint, generic_murcko_scaffold, levenshtein_similarity, mcs, murcko_scaffold, tanimoto,
    FingerprintBits, McsOptions, McsResult, SimilError,
};
pub use cliffs::{
    find_cliff_pairs, label_fragments, rel_dtap, ActivityRecord, CliffConfig, CliffError, CliffPair, DtapReport,
    FragmentLabels,
};
