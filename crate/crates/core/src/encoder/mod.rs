//! Per-scale encoding: merge application, scaffold-rooted BFS ordering,
//! token resolution with recursive recovery, and multi-scale views.

pub(crate) mod merge;

use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use thiserror::Error;

use crate::molgraph::{canonicalize, FragmentCoder, MolError, MolGraph};
use crate::vocab::{backoff_lookup, MergeOp, Vocabulary, BOS_ID, CONCAT_ID, EOS_ID};
pub(crate) use merge::MergeState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Mol(#[from] MolError),
    #[error("at least one vocabulary is required")]
    NoVocabularies,
    #[error("vocabularies were built from different merge lists")]
    MergeListMismatch,
    #[error("vocabularies must be ordered by ascending prefix length")]
    UnorderedScales,
    #[error("motif graph is disconnected")]
    Disconnected,
}

/// Merge history of a motif. Indices point into [`BpeGraph::tree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeTreeNode {
    Leaf { atom: usize },
    /// `left` is the operand with the smaller node id.
    Merge { op: usize, left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeNode {
    /// Original atom indices, ascending.
    pub atom_indices: Vec<usize>,
    /// Root of this node's merge tree.
    pub tree: usize,
    /// Smallest canonical rank among the node's atoms.
    pub node_id: usize,
}

/// A molecule partitioned into motifs. Nodes are sorted by node id; edges
/// are index pairs `(lo, hi)` into `nodes`, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpeGraph {
    pub nodes: Vec<BpeNode>,
    pub edges: Vec<(usize, usize)>,
    pub tree: Vec<MergeTreeNode>,
    pub atom_count: usize,
}

impl BpeGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Leaf atoms under a tree node, left subtree first.
    pub fn leaves(&self, tree_node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![tree_node];
        while let Some(t) = stack.pop() {
            match self.tree[t] {
                MergeTreeNode::Leaf { atom } => out.push(atom),
                MergeTreeNode::Merge { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceKind {
    /// One scale, identified by its vocabulary scale.
    SingleScale(usize),
    MultiScale,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CamsSequence {
    pub token_ids: Vec<u32>,
    pub kind: SequenceKind,
    /// Token ranges of each scale region, specials excluded.
    pub region_boundaries: Vec<Range<usize>>,
}

/// Multi-scale view with the atoms each token covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplainEncoding {
    pub token_ids: Vec<u32>,
    /// Sorted original atom indices per token; empty for specials.
    pub atom_sets: Vec<Vec<usize>>,
    pub region_boundaries: Vec<Range<usize>>,
}

/// Everything produced for one molecule across all scales.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiScaleEncoding {
    /// M single-scale views followed by the concatenated view.
    pub views: Vec<CamsSequence>,
    pub atom_count: usize,
    /// Motif-graph node count at each scale, before recovery splits.
    pub node_counts: Vec<usize>,
}

/// Applies a merge-list prefix to a molecule. Graphs without canonical ranks
/// are canonicalized first.
pub fn apply_merges(g: &MolGraph, ops: &[MergeOp]) -> Result<BpeGraph, MolError> {
    let owned;
    let g = if g.canonical_ranks().is_some() {
        g
    } else {
        owned = canonicalize(g)?.0;
        &owned
    };
    let ranks = op_rank_map(ops);
    let mut out = None;
    MergeState::new(g, Some(&ranks)).run(&[ops.len()], |_, bg| out = Some(bg));
    Ok(out.expect("one snapshot requested"))
}

fn op_rank_map(ops: &[MergeOp]) -> HashMap<String, usize> {
    ops.iter().enumerate().map(|(i, op)| (op.code.clone(), i)).collect()
}

/// Scaffold-rooted breadth-first order: the root is the node with the most
/// atoms (smallest node id on ties) and neighbors are queued by ascending
/// node id.
pub fn scaffold_bfs(bg: &BpeGraph) -> Result<Vec<usize>, EncodeError> {
    let n = bg.nodes.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let root = (0..n)
        .max_by(|&a, &b| {
            let (x, y) = (&bg.nodes[a], &bg.nodes[b]);
            x.atom_indices.len().cmp(&y.atom_indices.len()).then(y.node_id.cmp(&x.node_id))
        })
        .expect("non-empty");
    let mut adj = bg.adjacency();
    for list in &mut adj {
        list.sort_by_key(|&v| bg.nodes[v].node_id);
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &v in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    if order.len() != n {
        return Err(EncodeError::Disconnected);
    }
    Ok(order)
}

/// Token ids for nodes in the given order. A node whose code is missing
/// from the vocabulary is split along its merge tree; single atoms fall back
/// to their element's alternate-form token.
pub fn resolve_tokens(g: &MolGraph, bg: &BpeGraph, order: &[usize], v: &Vocabulary) -> Vec<u32> {
    let mut coder = FragmentCoder::new(g);
    let mut out = Vec::new();
    for &node in order {
        resolve(g, bg, bg.nodes[node].tree, v, &mut coder, &mut |id, _| out.push(id));
    }
    out
}

fn resolve(
    g: &MolGraph,
    bg: &BpeGraph,
    tree_node: usize,
    v: &Vocabulary,
    coder: &mut FragmentCoder<'_>,
    emit: &mut dyn FnMut(u32, Vec<usize>),
) {
    let atoms = bg.leaves(tree_node);
    let code = coder.code(&atoms, true).expect("merge trees cover connected atom sets");
    match bg.tree[tree_node] {
        MergeTreeNode::Leaf { atom } => {
            let id = backoff_lookup(v, &code, 1, g.atoms()[atom].element);
            emit(id, atoms);
        }
        MergeTreeNode::Merge { left, right, .. } => match v.id_of(&code) {
            Some(id) => {
                let mut atoms = atoms;
                atoms.sort_unstable();
                emit(id, atoms);
            }
            None => {
                resolve(g, bg, left, v, coder, emit);
                resolve(g, bg, right, v, coder, emit);
            }
        },
    }
}

/// Encoder bound to an ordered set of vocabularies sharing one merge list.
/// Building it once amortizes the merge-list index over many molecules.
pub struct Encoder<'v> {
    vocabs: Vec<&'v Vocabulary>,
    op_ranks: HashMap<String, usize>,
    prefixes: Vec<usize>,
}

impl<'v> Encoder<'v> {
    pub fn new(vocabs: &'v [Vocabulary]) -> Result<Self, EncodeError> {
        Self::from_refs(vocabs.iter().collect())
    }

    pub fn from_refs(vocabs: Vec<&'v Vocabulary>) -> Result<Self, EncodeError> {
        let Some(longest) = vocabs.iter().max_by_key(|v| v.prefix_k) else {
            return Err(EncodeError::NoVocabularies);
        };
        for v in &vocabs {
            if v.merge_list_hash != longest.merge_list_hash || longest.merges[..v.prefix_k] != v.merges[..] {
                return Err(EncodeError::MergeListMismatch);
            }
        }
        let prefixes: Vec<usize> = vocabs.iter().map(|v| v.prefix_k).collect();
        if prefixes.windows(2).any(|w| w[0] > w[1]) {
            return Err(EncodeError::UnorderedScales);
        }
        let op_ranks = op_rank_map(&longest.merges);
        Ok(Encoder { vocabs, op_ranks, prefixes })
    }

    pub fn scale_count(&self) -> usize {
        self.vocabs.len()
    }

    pub fn vocabularies(&self) -> &[&'v Vocabulary] {
        &self.vocabs
    }

    /// Motif graphs at every scale.
    pub fn motif_graphs(&self, g: &MolGraph) -> Result<(MolGraph, Vec<BpeGraph>), EncodeError> {
        let (cg, _) = canonicalize(g)?;
        let mut graphs = Vec::with_capacity(self.prefixes.len());
        MergeState::new(&cg, Some(&self.op_ranks)).run(&self.prefixes, |_, bg| graphs.push(bg));
        Ok((cg, graphs))
    }

    /// Per scale, the token ids and atom sets in emission order.
    fn scale_tokens(&self, g: &MolGraph) -> Result<(usize, Vec<usize>, Vec<Vec<(u32, Vec<usize>)>>), EncodeError> {
        let (cg, graphs) = self.motif_graphs(g)?;
        let mut coder = FragmentCoder::new(&cg);
        let mut per_scale = Vec::with_capacity(graphs.len());
        let mut node_counts = Vec::with_capacity(graphs.len());
        for (bg, v) in graphs.iter().zip(&self.vocabs) {
            let order = scaffold_bfs(bg)?;
            let mut tokens = Vec::with_capacity(order.len());
            for node in order {
                resolve(&cg, bg, bg.nodes[node].tree, v, &mut coder, &mut |id, atoms| tokens.push((id, atoms)));
            }
            node_counts.push(bg.node_count());
            per_scale.push(tokens);
        }
        Ok((cg.atom_count(), node_counts, per_scale))
    }

    pub fn encode(&self, g: &MolGraph) -> Result<MultiScaleEncoding, EncodeError> {
        let (atom_count, node_counts, per_scale) = self.scale_tokens(g)?;
        let mut views = Vec::with_capacity(per_scale.len() + 1);
        for (tokens, v) in per_scale.iter().zip(&self.vocabs) {
            let ids: Vec<u32> = tokens.iter().map(|(id, _)| *id).collect();
            let len = ids.len();
            views.push(CamsSequence { token_ids: ids, kind: SequenceKind::SingleScale(v.scale), region_boundaries: vec![0..len] });
        }
        let (token_ids, region_boundaries) = concatenate(views.iter().map(|s| s.token_ids.as_slice()));
        views.push(CamsSequence { token_ids, kind: SequenceKind::MultiScale, region_boundaries });
        Ok(MultiScaleEncoding { views, atom_count, node_counts })
    }

    pub fn explain(&self, g: &MolGraph) -> Result<ExplainEncoding, EncodeError> {
        let (_, _, per_scale) = self.scale_tokens(g)?;
        let mut token_ids = vec![BOS_ID];
        let mut atom_sets = vec![Vec::new()];
        let mut region_boundaries = Vec::with_capacity(per_scale.len());
        for (i, tokens) in per_scale.into_iter().enumerate() {
            if i > 0 {
                token_ids.push(CONCAT_ID);
                atom_sets.push(Vec::new());
            }
            let start = token_ids.len();
            for (id, atoms) in tokens {
                token_ids.push(id);
                atom_sets.push(atoms);
            }
            region_boundaries.push(start..token_ids.len());
        }
        token_ids.push(EOS_ID);
        atom_sets.push(Vec::new());
        Ok(ExplainEncoding { token_ids, atom_sets, region_boundaries })
    }
}

/// `[BOS] X1 [CONCAT] X2 ... XM [EOS]` and the region of each `Xi`.
pub fn concatenate<'a>(parts: impl IntoIterator<Item = &'a [u32]>) -> (Vec<u32>, Vec<Range<usize>>) {
    let mut ids = vec![BOS_ID];
    let mut regions = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        if i > 0 {
            ids.push(CONCAT_ID);
        }
        let start = ids.len();
        ids.extend_from_slice(part);
        regions.push(start..ids.len());
    }
    ids.push(EOS_ID);
    (ids, regions)
}

/// Single-scale view of one molecule, without framing tokens.
pub fn encode_scale(g: &MolGraph, v: &Vocabulary) -> Result<CamsSequence, EncodeError> {
    let encoder = Encoder::from_refs(vec![v])?;
    let mut enc = encoder.encode(g)?;
    enc.views.truncate(1);
    Ok(enc.views.pop().expect("one view"))
}

/// M single-scale views plus the concatenated view, vocabularies ordered
/// fine to coarse.
pub fn encode_multiscale(g: &MolGraph, vocabs: &[Vocabulary]) -> Result<Vec<CamsSequence>, EncodeError> {
    Ok(Encoder::new(vocabs)?.encode(g)?.views)
}

pub fn encode_explain(g: &MolGraph, vocabs: &[Vocabulary]) -> Result<ExplainEncoding, EncodeError> {
    Encoder::new(vocabs)?.explain(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{canonical_smiles, parse_smiles};
    use crate::synth::{random_permutation, MoleculeGenerator};
    use crate::vocab::{default_savc, learn_merges, materialize_vocab, materialize_vocabs, MergeList, UNK_ID};

    fn canon(s: &str) -> MolGraph {
        canonicalize(&parse_smiles(s).unwrap()).unwrap().0
    }

    fn single_op_list(code: &str) -> MergeList {
        MergeList {
            version: 1,
            k_max: 1,
            k_requested: 1,
            f_min: 1,
            corpus_id: String::new(),
            ops: vec![MergeOp { code: code.to_owned(), learned_frequency: 1 }],
        }
    }

    #[test]
    fn prefix_zero_is_identity_partition() {
        let g = canon("CC(=O)Nc1ccccc1");
        let bg = apply_merges(&g, &[]).unwrap();
        assert_eq!(bg.node_count(), g.atom_count());
        assert_eq!(bg.edges.len(), g.bonds().len());
        for node in &bg.nodes {
            assert_eq!(node.atom_indices.len(), 1);
            assert_eq!(node.node_id, g.canonical_ranks().unwrap()[node.atom_indices[0]]);
        }
    }

    #[test]
    fn one_carbon_carbon_merge_on_ethanol() {
        let g = canon("CCO");
        let cc = crate::molgraph::fragment_code(&g, &[0, 1], true).unwrap();
        let list = single_op_list(&cc);
        let bg = apply_merges(&g, &list.ops).unwrap();
        assert_eq!(bg.node_count(), 2);
        assert_eq!(bg.nodes[0].atom_indices, vec![0, 1]);
        assert_eq!(bg.nodes[1].atom_indices, vec![2]);
        assert_eq!(bg.edges, vec![(0, 1)]);
        assert!(matches!(bg.tree[bg.nodes[0].tree], MergeTreeNode::Merge { op: 0, left: 0, right: 1 }));
    }

    fn chain_graph(atom_counts: &[usize]) -> BpeGraph {
        let nodes = atom_counts
            .iter()
            .enumerate()
            .map(|(i, &c)| BpeNode { atom_indices: (0..c).map(|a| i * 10 + a).collect(), tree: 0, node_id: i })
            .collect();
        let edges = (1..atom_counts.len()).map(|i| (i - 1, i)).collect();
        BpeGraph { nodes, edges, tree: Vec::new(), atom_count: 0 }
    }

    #[test]
    fn bfs_on_three_node_path() {
        assert_eq!(scaffold_bfs(&chain_graph(&[1])).unwrap(), vec![0]);
        assert_eq!(scaffold_bfs(&chain_graph(&[1, 1, 1])).unwrap(), vec![0, 1, 2]);
        // the largest node roots the traversal
        assert_eq!(scaffold_bfs(&chain_graph(&[1, 3, 1])).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn bfs_rejects_disconnected() {
        let mut bg = chain_graph(&[1, 1, 1]);
        bg.edges.pop();
        assert_eq!(scaffold_bfs(&bg), Err(EncodeError::Disconnected));
    }

    #[test]
    fn bfs_ignores_node_list_order() {
        let bg = chain_graph(&[1, 2, 2, 1]);
        let order = scaffold_bfs(&bg).unwrap();
        let ids: Vec<usize> = order.iter().map(|&i| bg.nodes[i].node_id).collect();
        let mut shuffled = bg.clone();
        shuffled.nodes.reverse();
        shuffled.edges = bg.edges.iter().map(|&(u, v)| (3 - v, 3 - u)).collect();
        let order2 = scaffold_bfs(&shuffled).unwrap();
        let ids2: Vec<usize> = order2.iter().map(|&i| shuffled.nodes[i].node_id).collect();
        assert_eq!(ids, ids2);
    }

    #[test]
    fn toluene_ring_motif_comes_first() {
        let g = canon("Cc1ccccc1");
        let ring: Vec<usize> = (1..7).collect();
        let mut bg = apply_merges(&g, &[]).unwrap();
        // collapse the ring atoms into one node by hand
        let ranks = g.canonical_ranks().unwrap();
        bg.nodes = vec![
            BpeNode { atom_indices: vec![0], tree: 0, node_id: ranks[0] },
            BpeNode { atom_indices: ring.clone(), tree: 1, node_id: ring.iter().map(|&a| ranks[a]).min().unwrap() },
        ];
        bg.edges = vec![(0, 1)];
        let order = scaffold_bfs(&bg).unwrap();
        assert_eq!(order, vec![1, 0]);
    }

    #[test]
    fn filtered_pair_is_split_in_tree_order() {
        let corpus = vec![parse_smiles("CCO").unwrap()];
        let merges = learn_merges(&corpus, 1, 1);
        let v = materialize_vocab(&corpus, &merges, 1, &default_savc(), 2).unwrap();
        let g = canon("CCO");
        let bg = apply_merges(&g, &merges.ops).unwrap();
        assert_eq!(bg.node_count(), 2);
        let order = scaffold_bfs(&bg).unwrap();
        let ids = resolve_tokens(&g, &bg, &order, &v);
        let expect: Vec<u32> =
            ["*C*", "*O", "*C"].iter().map(|s| v.id_of(&canonical_smiles(s).unwrap()).unwrap()).collect();
        assert_eq!(ids, expect);
    }

    #[test]
    fn known_codes_give_one_token_per_node() {
        let corpus: Vec<MolGraph> = ["CCO", "CCO", "CC(=O)O"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let merges = learn_merges(&corpus, 3, 1);
        let v = materialize_vocab(&corpus, &merges, merges.k_max, &default_savc(), 1).unwrap();
        for g in &corpus {
            let cg = canonicalize(g).unwrap().0;
            let bg = apply_merges(&cg, &v.merges).unwrap();
            let seq = encode_scale(g, &v).unwrap();
            assert_eq!(seq.token_ids.len(), bg.node_count());
        }
    }

    #[test]
    fn unknown_single_atom_uses_altform() {
        let v = materialize_vocab(&[], &learn_merges(&[], 0, 1), 0, &default_savc(), 1).unwrap();
        let seq = encode_scale(&parse_smiles("C[N+](C)(C)C").unwrap(), &v).unwrap();
        assert!(seq.token_ids.contains(&v.id_of("[N_AltForm]").unwrap()));
        assert!(!seq.token_ids.contains(&UNK_ID));
    }

    #[test]
    fn methane_is_one_token() {
        let v = materialize_vocab(&[], &learn_merges(&[], 0, 1), 0, &default_savc(), 1).unwrap();
        let seq = encode_scale(&parse_smiles("C").unwrap(), &v).unwrap();
        assert_eq!(seq.token_ids.len(), 1);
        assert_eq!(v.token(seq.token_ids[0]).unwrap().with_conn, "C");
        assert_eq!(seq.kind, SequenceKind::SingleScale(v.scale));
    }

    fn small_scales() -> (Vec<MolGraph>, Vec<Vocabulary>) {
        let mut gen = MoleculeGenerator::new(5);
        let corpus: Vec<MolGraph> = (0..60).map(|_| gen.molecule(25)).collect();
        let merges = learn_merges(&corpus, 40, 2);
        let k = merges.k_max;
        let prefixes = [0, k / 4, k / 2, k];
        let vocabs = materialize_vocabs(&corpus, &merges, &prefixes, &default_savc(), 1).unwrap();
        (corpus, vocabs)
    }

    #[test]
    fn multiscale_framing_and_partition() {
        let (corpus, vocabs) = small_scales();
        let encoder = Encoder::new(&vocabs).unwrap();
        for g in &corpus {
            let enc = encoder.encode(g).unwrap();
            assert_eq!(enc.views.len(), 5);
            let concat = &enc.views[4];
            assert_eq!(concat.kind, SequenceKind::MultiScale);
            assert_eq!(concat.token_ids.iter().filter(|&&t| t == BOS_ID).count(), 1);
            assert_eq!(concat.token_ids.iter().filter(|&&t| t == EOS_ID).count(), 1);
            assert_eq!(concat.token_ids.iter().filter(|&&t| t == CONCAT_ID).count(), 3);
            for w in enc.node_counts.windows(2) {
                assert!(w[1] <= w[0]);
            }
            let explain = encoder.explain(g).unwrap();
            assert_eq!(explain.token_ids, concat.token_ids);
            assert_eq!(explain.region_boundaries, concat.region_boundaries);
            for region in &explain.region_boundaries {
                let mut all: Vec<usize> = explain.atom_sets[region.clone()].concat();
                all.sort_unstable();
                assert_eq!(all, (0..g.atom_count()).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn encoding_ignores_atom_order() {
        let (corpus, vocabs) = small_scales();
        let encoder = Encoder::new(&vocabs).unwrap();
        let mut rng = rand::SeedableRng::seed_from_u64(9);
        for g in corpus.iter().take(20) {
            let reference = encoder.encode(g).unwrap().views;
            for _ in 0..5 {
                let perm = random_permutation::<rand_chacha::ChaCha8Rng>(&mut rng, g.atom_count());
                assert_eq!(encoder.encode(&g.permuted(&perm)).unwrap().views, reference);
            }
        }
    }

    #[test]
    fn single_scale_concat_has_no_separator() {
        let (_, vocabs) = small_scales();
        let views = encode_multiscale(&parse_smiles("c1ccccc1O").unwrap(), &vocabs[..1]).unwrap();
        assert_eq!(views.len(), 2);
        let concat = &views[1].token_ids;
        assert_eq!(concat[0], BOS_ID);
        assert_eq!(*concat.last().unwrap(), EOS_ID);
        assert!(!concat.contains(&CONCAT_ID));
        assert_eq!(&concat[1..concat.len() - 1], views[0].token_ids.as_slice());
    }

    #[test]
    fn vocabulary_errors() {
        assert_eq!(encode_multiscale(&parse_smiles("C").unwrap(), &[]).unwrap_err(), EncodeError::NoVocabularies);
        let (_, vocabs) = small_scales();
        let reversed: Vec<Vocabulary> = vocabs.iter().rev().cloned().collect();
        assert_eq!(Encoder::new(&reversed).err(), Some(EncodeError::UnorderedScales));
        let other = materialize_vocab(&[], &learn_merges(&[], 0, 1), 0, &default_savc(), 1).unwrap();
        let mixed = vec![other, vocabs[3].clone()];
        assert_eq!(Encoder::new(&mixed).err(), Some(EncodeError::MergeListMismatch));
        assert!(matches!(
            encode_scale(&parse_smiles("C.C").unwrap(), &vocabs[0]),
            Err(EncodeError::Mol(MolError::MultiFragment { .. }))
        ));
    }
}
