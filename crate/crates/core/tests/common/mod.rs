//! Brute-force reference implementations shared by the oracle and
//! acceptance tests. Each one is written from the rule it checks, without
//! reusing the library's search or bookkeeping code.

#![allow(dead_code)]

use std::collections::HashSet;

use cams_core::{canonicalize, fragment_code, BondOrder, MolGraph};

pub fn bond(g: &MolGraph, x: usize, y: usize) -> Option<BondOrder> {
    g.bonds().iter().find(|b| (b.a == x && b.b == y) || (b.a == y && b.b == x)).map(|b| b.order)
}

/// Connected within `set` after deleting the edge x-y.
fn connected_without(g: &MolGraph, set: &[usize], x: usize, y: usize) -> bool {
    let mut seen = vec![x];
    let mut stack = vec![x];
    while let Some(u) = stack.pop() {
        for b in g.bonds() {
            let v = if b.a == u { b.b } else if b.b == u { b.a } else { continue };
            if (u == x && v == y) || (u == y && v == x) || !set.contains(&v) || seen.contains(&v) {
                continue;
            }
            if v == y {
                return true;
            }
            seen.push(v);
            stack.push(v);
        }
    }
    false
}

pub fn is_connected_set(g: &MolGraph, set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let mut seen = vec![set[0]];
    let mut stack = vec![set[0]];
    while let Some(u) = stack.pop() {
        for b in g.bonds() {
            let v = if b.a == u { b.b } else if b.b == u { b.a } else { continue };
            if set.contains(&v) && !seen.contains(&v) {
                seen.push(v);
                stack.push(v);
            }
        }
    }
    seen.len() == set.len()
}

pub fn is_ring_bond(g: &MolGraph, x: usize, y: usize) -> bool {
    let all: Vec<usize> = (0..g.atom_count()).collect();
    connected_without(g, &all, x, y)
}

pub fn is_ring_atom(g: &MolGraph, x: usize) -> bool {
    g.bonds().iter().any(|b| (b.a == x || b.b == x) && is_ring_bond(g, b.a, b.b))
}

/// Every parent ring bond inside `set` closes a cycle inside `set`, and
/// every parent ring atom touches such a cycle.
pub fn rings_complete(g: &MolGraph, set: &[usize]) -> bool {
    for b in g.bonds() {
        if set.contains(&b.a) && set.contains(&b.b) && is_ring_bond(g, b.a, b.b) && !connected_without(g, set, b.a, b.b) {
            return false;
        }
    }
    set.iter().all(|&x| {
        !is_ring_atom(g, x)
            || g.bonds().iter().any(|b| {
                let other = if b.a == x { b.b } else if b.b == x { b.a } else { return false };
                set.contains(&other) && connected_without(g, set, x, other)
            })
    })
}

pub fn connected_subsets(g: &MolGraph) -> Vec<Vec<usize>> {
    let n = g.atom_count();
    assert!(n <= 16, "exhaustive enumeration only for small graphs");
    (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>())
        .filter(|s| is_connected_set(g, s))
        .collect()
}

#[derive(Clone, Copy)]
pub struct Flags {
    pub complete_rings_only: bool,
    pub ring_matches_ring: bool,
    pub compare_elements: bool,
    pub compare_order: bool,
}

pub const DEFAULT_FLAGS: Flags =
    Flags { complete_rings_only: true, ring_matches_ring: true, compare_elements: true, compare_order: true };

fn extend_map(a: &MolGraph, b: &MolGraph, sa: &[usize], sb: &[usize], map: &mut Vec<usize>, f: Flags) -> bool {
    let i = map.len();
    if i == sa.len() {
        return true;
    }
    let x = sa[i];
    for &y in sb {
        if map.contains(&y) {
            continue;
        }
        if f.compare_elements && a.atoms()[x].element != b.atoms()[y].element {
            continue;
        }
        let ok = (0..i).all(|j| match (bond(a, x, sa[j]), bond(b, y, map[j])) {
            (None, None) => true,
            (Some(p), Some(q)) => {
                (!f.compare_order || p == q)
                    && (!f.ring_matches_ring || is_ring_bond(a, x, sa[j]) == is_ring_bond(b, y, map[j]))
            }
            _ => false,
        });
        if ok {
            map.push(y);
            if extend_map(a, b, sa, sb, map, f) {
                return true;
            }
            map.pop();
        }
    }
    false
}

/// Whether the induced subgraphs on `sa` and `sb` match under `f`.
pub fn sets_match(a: &MolGraph, b: &MolGraph, sa: &[usize], sb: &[usize], f: Flags) -> bool {
    sa.len() == sb.len() && extend_map(a, b, sa, sb, &mut Vec::new(), f)
}

/// Size of the largest common connected induced substructure.
pub fn brute_mcs_size(a: &MolGraph, b: &MolGraph, f: Flags) -> usize {
    let mut subs_a = connected_subsets(a);
    let subs_b = connected_subsets(b);
    if f.complete_rings_only {
        subs_a.retain(|s| rings_complete(a, s));
    }
    let subs_b: Vec<Vec<usize>> =
        subs_b.into_iter().filter(|s| !f.complete_rings_only || rings_complete(b, s)).collect();
    subs_a.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let mut best = 0;
    for sa in &subs_a {
        if sa.len() <= best {
            break;
        }
        if subs_b.iter().any(|sb| sets_match(a, b, sa, sb, f)) {
            best = sa.len();
        }
    }
    best
}

/// Explicit fragment graph with one wildcard per cut bond; labels are
/// (element, charge, hydrogens, aromatic).
pub struct FragGraph {
    pub labels: Vec<(u8, i8, u8, bool)>,
    pub adj: Vec<Vec<Option<BondOrder>>>,
}

pub fn fragment_graph(g: &MolGraph, subset: &[usize]) -> FragGraph {
    let mut labels: Vec<(u8, i8, u8, bool)> = subset
        .iter()
        .map(|&x| {
            let a = &g.atoms()[x];
            (a.element.atomic_number(), a.formal_charge, a.explicit_h, a.aromatic)
        })
        .collect();
    let mut edges = Vec::new();
    for b in g.bonds() {
        match (subset.iter().position(|&x| x == b.a), subset.iter().position(|&x| x == b.b)) {
            (Some(i), Some(j)) => edges.push((i, j, b.order)),
            (Some(i), None) | (None, Some(i)) => {
                labels.push((0, 0, 0, false));
                edges.push((i, labels.len() - 1, b.order));
            }
            (None, None) => {}
        }
    }
    let n = labels.len();
    let mut adj = vec![vec![None; n]; n];
    for (i, j, o) in edges {
        adj[i][j] = Some(o);
        adj[j][i] = Some(o);
    }
    FragGraph { labels, adj }
}

fn iso_extend(x: &FragGraph, y: &FragGraph, map: &mut Vec<usize>, used: &mut [bool]) -> bool {
    let i = map.len();
    if i == x.labels.len() {
        return true;
    }
    for j in 0..y.labels.len() {
        if used[j] || x.labels[i] != y.labels[j] {
            continue;
        }
        if (0..i).all(|k| x.adj[i][k] == y.adj[j][map[k]]) {
            used[j] = true;
            map.push(j);
            if iso_extend(x, y, map, used) {
                return true;
            }
            map.pop();
            used[j] = false;
        }
    }
    false
}

pub fn isomorphic(x: &FragGraph, y: &FragGraph) -> bool {
    if x.labels.len() != y.labels.len() {
        return false;
    }
    let mut lx = x.labels.clone();
    let mut ly = y.labels.clone();
    lx.sort();
    ly.sort();
    lx == ly && iso_extend(x, y, &mut Vec::new(), &mut vec![false; y.labels.len()])
}

/// Connected subsets of up to `max_size` atoms, grown breadth-first.
pub fn small_connected_subsets(g: &MolGraph, max_size: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut layer: Vec<Vec<usize>> = (0..g.atom_count()).map(|a| vec![a]).collect();
    let mut out = Vec::new();
    for _ in 0..max_size {
        let mut next = Vec::new();
        for s in layer {
            if !seen.insert(s.clone()) {
                continue;
            }
            out.push(s.clone());
            if out.len() >= cap {
                return out;
            }
            for &x in &s {
                for (nb, _) in g.neighbors(x) {
                    if !s.contains(&nb) {
                        let mut t = s.clone();
                        t.push(nb);
                        t.sort_unstable();
                        next.push(t);
                    }
                }
            }
        }
        layer = next;
    }
    out
}

/// One merge-learning round recomputed from scratch: every adjacent part
/// pair is coded and counted, and the winner is the greatest
/// (count, code) among codes not yet used.
pub struct MergeOracle {
    pub graphs: Vec<MolGraph>,
    pub parts: Vec<Vec<Vec<usize>>>,
    pub used: HashSet<String>,
}

impl MergeOracle {
    pub fn new(corpus: &[MolGraph]) -> Self {
        let graphs: Vec<MolGraph> = corpus.iter().filter_map(|g| canonicalize(g).ok().map(|(cg, _)| cg)).collect();
        let parts = graphs.iter().map(|g| (0..g.atom_count()).map(|a| vec![a]).collect()).collect();
        MergeOracle { graphs, parts, used: HashSet::new() }
    }

    fn adjacent_pairs(g: &MolGraph, parts: &[Vec<usize>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if parts[i].iter().any(|&x| parts[j].iter().any(|&y| bond(g, x, y).is_some())) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn union_code(g: &MolGraph, x: &[usize], y: &[usize]) -> String {
        let mut u: Vec<usize> = x.iter().chain(y).copied().collect();
        u.sort_unstable();
        fragment_code(g, &u, true).unwrap()
    }

    /// Best (count, code) this round, before the f_min check.
    pub fn best(&self) -> Option<(u64, String)> {
        let mut counts: std::collections::HashMap<String, u64> = Default::default();
        for (g, parts) in self.graphs.iter().zip(&self.parts) {
            for (i, j) in Self::adjacent_pairs(g, parts) {
                let code = Self::union_code(g, &parts[i], &parts[j]);
                if !self.used.contains(&code) {
                    *counts.entry(code).or_default() += 1;
                }
            }
        }
        counts.into_iter().map(|(c, n)| (n, c)).max()
    }

    /// Merges every pair with `code`, lowest canonical ranks first; a part
    /// takes part in at most one merge per application.
    pub fn apply(&mut self, code: &str) {
        self.used.insert(code.to_owned());
        for (g, parts) in self.graphs.iter().zip(self.parts.iter_mut()) {
            let ranks = g.canonical_ranks().unwrap();
            let min_rank = |p: &[usize]| p.iter().map(|&a| ranks[a]).min().unwrap();
            let max_rank = |p: &[usize]| p.iter().map(|&a| ranks[a]).max().unwrap();
            let mut matches: Vec<(usize, usize)> = Self::adjacent_pairs(g, parts)
                .into_iter()
                .filter(|&(i, j)| Self::union_code(g, &parts[i], &parts[j]) == code)
                .collect();
            matches.sort_by_key(|&(i, j)| {
                let (a, b) = (min_rank(&parts[i]), min_rank(&parts[j]));
                (a.min(b), max_rank(&parts[i]).max(max_rank(&parts[j])), a.max(b))
            });
            let mut consumed = vec![false; parts.len()];
            let mut merged = Vec::new();
            for (i, j) in matches {
                if consumed[i] || consumed[j] {
                    continue;
                }
                consumed[i] = true;
                consumed[j] = true;
                let mut u: Vec<usize> = parts[i].iter().chain(&parts[j]).copied().collect();
                u.sort_unstable();
                merged.push(u);
            }
            let mut next: Vec<Vec<usize>> =
                parts.iter().enumerate().filter(|(i, _)| !consumed[*i]).map(|(_, p)| p.clone()).collect();
            next.extend(merged);
            *parts = next;
        }
    }
}
