//! Incremental merge application shared by merge learning, vocabulary
//! materialization and encoding. All three must partition molecules
//! identically, so they all go through this one state machine.

use std::collections::HashMap;

use super::{BpeGraph, BpeNode, MergeTreeNode};
use crate::molgraph::{FragmentCoder, MolGraph};

#[derive(Clone, Debug)]
struct Slot {
    /// Original atom indices, ascending.
    atoms: Vec<usize>,
    tree: usize,
    /// Smallest canonical rank among the atoms.
    node_id: usize,
    max_rank: usize,
    alive: bool,
}

#[derive(Clone, Debug)]
struct Edge {
    code: String,
    /// Position of `code` in the merge list, if it is there at all.
    op_rank: usize,
}

const NO_RANK: usize = usize::MAX;

/// Code-count changes produced by one merge application: (code, +1/-1).
pub(crate) type Delta = Vec<(String, i32)>;

pub(crate) struct MergeState<'a> {
    g: &'a MolGraph,
    coder: FragmentCoder<'a>,
    op_ranks: Option<&'a HashMap<String, usize>>,
    owner: Vec<usize>,
    slots: Vec<Slot>,
    tree: Vec<MergeTreeNode>,
    edges: HashMap<(usize, usize), Edge>,
    scratch: Vec<usize>,
}

impl<'a> MergeState<'a> {
    /// One node per atom. `g` must carry canonical ranks. When `op_ranks`
    /// is given, every edge remembers where its code sits in the merge list
    /// so [`MergeState::run`] can jump straight to applicable operations.
    pub fn new(g: &'a MolGraph, op_ranks: Option<&'a HashMap<String, usize>>) -> Self {
        let ranks = g.canonical_ranks().expect("merge state needs a canonicalized graph");
        let n = g.atom_count();
        let slots = (0..n)
            .map(|a| Slot { atoms: vec![a], tree: a, node_id: ranks[a], max_rank: ranks[a], alive: true })
            .collect();
        let tree = (0..n).map(|atom| MergeTreeNode::Leaf { atom }).collect();
        let mut state = MergeState {
            g,
            coder: FragmentCoder::new(g),
            op_ranks,
            owner: (0..n).collect(),
            slots,
            tree,
            edges: HashMap::with_capacity(g.bonds().len()),
            scratch: Vec::new(),
        };
        for bond in g.bonds() {
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            let edge = state.make_edge(key.0, key.1);
            state.edges.insert(key, edge);
        }
        state
    }

    fn make_edge(&mut self, u: usize, v: usize) -> Edge {
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.slots[u].atoms);
        self.scratch.extend_from_slice(&self.slots[v].atoms);
        let code = self.coder.code(&self.scratch, true).expect("adjacent nodes form a connected union");
        let op_rank = self.op_ranks.and_then(|m| m.get(&code).copied()).unwrap_or(NO_RANK);
        Edge { code, op_rank }
    }

    /// Current edge codes, one entry per adjacent node pair.
    pub fn edge_codes(&self) -> impl Iterator<Item = &str> {
        self.edges.values().map(|e| e.code.as_str())
    }

    /// Applies operation `op` (whose code is `code`) to every matching edge
    /// and returns the resulting code-count changes.
    pub fn apply_code(&mut self, op: usize, code: &str) -> Delta {
        let matches: Vec<(usize, usize)> =
            self.edges.iter().filter(|(_, e)| e.code == code).map(|(&k, _)| k).collect();
        self.merge_matches(op, matches)
    }

    fn apply_rank(&mut self, op: usize) -> Delta {
        let matches: Vec<(usize, usize)> =
            self.edges.iter().filter(|(_, e)| e.op_rank == op).map(|(&k, _)| k).collect();
        self.merge_matches(op, matches)
    }

    /// Greedy merge of the matched edges. Matches are ordered by the
    /// smallest canonical rank in the union, then the largest, so overlaps
    /// resolve toward low canonical indices; a node consumed by an earlier
    /// match in the same application is skipped.
    fn merge_matches(&mut self, op: usize, mut matches: Vec<(usize, usize)>) -> Delta {
        let mut delta = Delta::new();
        if matches.is_empty() {
            return delta;
        }
        matches.sort_by_key(|&(u, v)| {
            let (a, b) = (&self.slots[u], &self.slots[v]);
            let (lo, hi) = if a.node_id < b.node_id { (a.node_id, b.node_id) } else { (b.node_id, a.node_id) };
            (lo, a.max_rank.max(b.max_rank), hi)
        });
        let mut created = Vec::new();
        let first_new = self.slots.len();
        for (u, v) in matches {
            // nodes created in this application are off limits too
            if !self.slots[u].alive || !self.slots[v].alive || u >= first_new || v >= first_new {
                continue;
            }
            let (first, second) = if self.slots[u].node_id < self.slots[v].node_id { (u, v) } else { (v, u) };
            let w = self.slots.len();
            let mut atoms = Vec::with_capacity(self.slots[first].atoms.len() + self.slots[second].atoms.len());
            atoms.extend_from_slice(&self.slots[first].atoms);
            atoms.extend_from_slice(&self.slots[second].atoms);
            atoms.sort_unstable();
            for &a in &atoms {
                self.owner[a] = w;
            }
            let tree = self.tree.len();
            self.tree.push(MergeTreeNode::Merge { op, left: self.slots[first].tree, right: self.slots[second].tree });
            let slot = Slot {
                atoms,
                tree,
                node_id: self.slots[first].node_id,
                max_rank: self.slots[first].max_rank.max(self.slots[second].max_rank),
                alive: true,
            };
            self.slots[first].alive = false;
            self.slots[second].alive = false;
            self.slots.push(slot);
            created.push(w);
        }

        let stale: Vec<(usize, usize)> = self
            .edges
            .keys()
            .filter(|&&(u, v)| !self.slots[u].alive || !self.slots[v].alive)
            .copied()
            .collect();
        for key in stale {
            let edge = self.edges.remove(&key).expect("stale edge present");
            delta.push((edge.code, -1));
        }
        for &w in &created {
            let mut neighbors: Vec<usize> = Vec::new();
            for &a in &self.slots[w].atoms {
                for (b, _) in self.g.neighbors(a) {
                    let o = self.owner[b];
                    if o != w {
                        neighbors.push(o);
                    }
                }
            }
            neighbors.sort_unstable();
            neighbors.dedup();
            for nb in neighbors {
                let key = (w.min(nb), w.max(nb));
                if self.edges.contains_key(&key) {
                    continue;
                }
                let edge = self.make_edge(key.0, key.1);
                delta.push((edge.code.clone(), 1));
                self.edges.insert(key, edge);
            }
        }
        delta
    }

    /// Applies the merge list in order, skipping operations with no
    /// matching edge, and hands out a snapshot at each requested prefix
    /// length (ascending). Requires `op_ranks`.
    pub fn run(&mut self, prefixes: &[usize], mut on_snapshot: impl FnMut(usize, BpeGraph)) {
        debug_assert!(self.op_ranks.is_some());
        debug_assert!(prefixes.windows(2).all(|w| w[0] <= w[1]));
        let mut pending = prefixes.iter().copied().enumerate().peekable();
        let mut next_op = 0;
        while pending.peek().is_some() {
            let upcoming = self
                .edges
                .values()
                .map(|e| e.op_rank)
                .filter(|&r| r != NO_RANK && r >= next_op)
                .min()
                .unwrap_or(NO_RANK);
            while let Some(&(i, p)) = pending.peek() {
                if p <= upcoming {
                    on_snapshot(i, self.snapshot());
                    pending.next();
                } else {
                    break;
                }
            }
            if pending.peek().is_none() || upcoming == NO_RANK {
                break;
            }
            self.apply_rank(upcoming);
            next_op = upcoming + 1;
        }
    }

    /// The current partition as a standalone graph, nodes ordered by
    /// node id.
    pub fn snapshot(&self) -> BpeGraph {
        let mut alive: Vec<usize> = (0..self.slots.len()).filter(|&s| self.slots[s].alive).collect();
        alive.sort_by_key(|&s| self.slots[s].node_id);
        let mut position = vec![usize::MAX; self.slots.len()];
        for (i, &s) in alive.iter().enumerate() {
            position[s] = i;
        }
        let nodes = alive
            .iter()
            .map(|&s| {
                let slot = &self.slots[s];
                BpeNode { atom_indices: slot.atoms.clone(), tree: slot.tree, node_id: slot.node_id }
            })
            .collect();
        let mut edges: Vec<(usize, usize)> = self
            .edges
            .keys()
            .map(|&(u, v)| {
                let (a, b) = (position[u], position[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        BpeGraph { nodes, edges, tree: self.tree.clone(), atom_count: self.g.atom_count() }
    }
}
