//! Maximum common connected induced substructure by branch and bound.

use std::time::{Duration, Instant};

use crate::molgraph::{fragment_code, BondOrder, MolGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct McsOptions {
    /// A matched ring atom or ring bond must lie on a cycle of the match.
    pub complete_rings_only: bool,
    /// Ring bonds match only ring bonds, chain bonds only chain bonds.
    pub ring_matches_ring: bool,
    pub compare_elements: bool,
    pub compare_order: bool,
    pub node_budget: u64,
    pub time_budget: Duration,
}

impl Default for McsOptions {
    fn default() -> Self {
        McsOptions {
            complete_rings_only: true,
            ring_matches_ring: true,
            compare_elements: true,
            compare_order: true,
            node_budget: 1_000_000,
            time_budget: Duration::from_secs(5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McsResult {
    /// Matched atoms of `a`, ascending.
    pub matched_a: Vec<usize>,
    /// `matched_b[i]` is the partner of `matched_a[i]`.
    pub matched_b: Vec<usize>,
    /// Canonical code of the matched substructure of `a`.
    pub smarts_like_code: String,
    /// The search hit a budget; the match may not be maximum.
    pub truncated: bool,
}

const NONE: usize = usize::MAX;

/// Dense bond lookup: (order, is ring bond) per atom pair.
struct Side {
    n: usize,
    adj: Vec<Option<(BondOrder, bool)>>,
    nbrs: Vec<Vec<usize>>,
    ring_atom: Vec<bool>,
    element: Vec<u8>,
}

impl Side {
    fn new(g: &MolGraph) -> Self {
        let n = g.atom_count();
        let ring = g.ring_bonds();
        let mut adj = vec![None; n * n];
        let mut nbrs = vec![Vec::new(); n];
        for (bi, b) in g.bonds().iter().enumerate() {
            adj[b.a * n + b.b] = Some((b.order, ring[bi]));
            adj[b.b * n + b.a] = Some((b.order, ring[bi]));
            nbrs[b.a].push(b.b);
            nbrs[b.b].push(b.a);
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        Side {
            n,
            adj,
            nbrs,
            ring_atom: g.ring_atoms(),
            element: g.atoms().iter().map(|a| a.element.atomic_number()).collect(),
        }
    }

    fn bond(&self, x: usize, y: usize) -> Option<(BondOrder, bool)> {
        self.adj[x * self.n + y]
    }

    /// Ring atoms and ring bonds of `atoms` must sit on a cycle of the
    /// induced subgraph they form.
    fn rings_complete(&self, atoms: &[usize]) -> bool {
        let m = atoms.len();
        let mut local = vec![NONE; self.n];
        for (i, &a) in atoms.iter().enumerate() {
            local[a] = i;
        }
        let mut edges = Vec::new();
        for (i, &a) in atoms.iter().enumerate() {
            for &nb in &self.nbrs[a] {
                let j = local[nb];
                if j != NONE && i < j {
                    edges.push((i, j, self.bond(a, nb).unwrap().1));
                }
            }
        }
        let cyclic = cyclic_edges(m, &edges);
        let mut on_cycle = vec![false; m];
        for (e, &(i, j, ring)) in edges.iter().enumerate() {
            if ring && !cyclic[e] {
                return false;
            }
            if cyclic[e] {
                on_cycle[i] = true;
                on_cycle[j] = true;
            }
        }
        atoms.iter().enumerate().all(|(i, &a)| !self.ring_atom[a] || on_cycle[i])
    }
}

/// Non-bridge flags for a small edge list.
fn cyclic_edges(n: usize, edges: &[(usize, usize, bool)]) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for (e, &(i, j, _)) in edges.iter().enumerate() {
        adj[i].push((j, e));
        adj[j].push((i, e));
    }
    let mut disc = vec![NONE; n];
    let mut low = vec![0; n];
    let mut bridge = vec![false; edges.len()];
    let mut timer = 0;
    fn dfs(u: usize, pe: usize, adj: &[Vec<(usize, usize)>], disc: &mut [usize], low: &mut [usize], t: &mut usize, bridge: &mut [bool]) {
        disc[u] = *t;
        low[u] = *t;
        *t += 1;
        for &(v, e) in &adj[u] {
            if e == pe {
                continue;
            }
            if disc[v] == NONE {
                dfs(v, e, adj, disc, low, t, bridge);
                low[u] = low[u].min(low[v]);
                if low[v] > disc[u] {
                    bridge[e] = true;
                }
            } else {
                low[u] = low[u].min(disc[v]);
            }
        }
    }
    for s in 0..n {
        if disc[s] == NONE {
            dfs(s, NONE, &adj, &mut disc, &mut low, &mut timer, &mut bridge);
        }
    }
    bridge.into_iter().map(|b| !b).collect()
}

struct Search<'o> {
    a: Side,
    b: Side,
    opts: &'o McsOptions,
    map_a: Vec<usize>,
    map_b: Vec<usize>,
    excluded: Vec<bool>,
    matched: Vec<usize>,
    best: Vec<(usize, usize)>,
    nodes: u64,
    started: Instant,
    truncated: bool,
    // scratch
    seen_a: Vec<bool>,
    seen_b: Vec<bool>,
    count_a: Vec<u32>,
    count_b: Vec<u32>,
}

impl Search<'_> {
    fn atoms_match(&self, x: usize, y: usize) -> bool {
        !self.opts.compare_elements || self.a.element[x] == self.b.element[y]
    }

    fn bonds_match(&self, p: Option<(BondOrder, bool)>, q: Option<(BondOrder, bool)>) -> bool {
        match (p, q) {
            (None, None) => true,
            (Some((op, rp)), Some((oq, rq))) => {
                (!self.opts.compare_order || op == oq) && (!self.opts.ring_matches_ring || rp == rq)
            }
            _ => false,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.truncated {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.opts.node_budget
            || (self.nodes.is_multiple_of(1024) && self.started.elapsed() > self.opts.time_budget)
        {
            self.truncated = true;
        }
        self.truncated
    }

    fn sorted_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self.matched.iter().map(|&x| (x, self.map_a[x])).collect();
        pairs.sort_unstable();
        pairs
    }

    /// Larger first, then the lexicographically smaller `a` tuple.
    fn better(&self, pairs: &[(usize, usize)]) -> bool {
        if pairs.len() != self.best.len() {
            return pairs.len() > self.best.len();
        }
        pairs.iter().map(|p| p.0).lt(self.best.iter().map(|p| p.0))
    }

    fn record(&mut self) {
        let pairs = self.sorted_pairs();
        if !self.better(&pairs) {
            return;
        }
        if self.opts.complete_rings_only {
            let atoms_a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let atoms_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            if !self.a.rings_complete(&atoms_a) || !self.b.rings_complete(&atoms_b) {
                return;
            }
        }
        self.best = pairs;
    }

    /// Whether no extension of the current match can beat the incumbent.
    /// The bound pairs up, element by element, the atoms still reachable
    /// from the match on each side.
    fn hopeless(&mut self) -> bool {
        let key = |e: u8, cmp: bool| if cmp { e as usize } else { 0 };
        let cmp = self.opts.compare_elements;
        let mut reach_a = Vec::new();
        let mut stack: Vec<usize> = self.matched.clone();
        for &x in &stack {
            self.seen_a[x] = true;
        }
        while let Some(x) = stack.pop() {
            for &nb in &self.a.nbrs[x] {
                if !self.seen_a[nb] && !self.excluded[nb] && self.map_a[nb] == NONE {
                    self.seen_a[nb] = true;
                    reach_a.push(nb);
                    stack.push(nb);
                }
            }
        }
        let mut reach_b = Vec::new();
        let mut stack: Vec<usize> = self.matched.iter().map(|&x| self.map_a[x]).collect();
        for &y in &stack {
            self.seen_b[y] = true;
        }
        while let Some(y) = stack.pop() {
            for &nb in &self.b.nbrs[y] {
                if !self.seen_b[nb] && self.map_b[nb] == NONE {
                    self.seen_b[nb] = true;
                    reach_b.push(nb);
                    stack.push(nb);
                }
            }
        }
        for &x in &reach_a {
            self.count_a[key(self.a.element[x], cmp)] += 1;
        }
        for &y in &reach_b {
            self.count_b[key(self.b.element[y], cmp)] += 1;
        }
        let mut extra = 0;
        for &x in &reach_a {
            let k = key(self.a.element[x], cmp);
            extra += self.count_a[k].min(self.count_b[k]) as usize;
            self.count_a[k] = 0;
            self.count_b[k] = 0;
        }
        for &y in &reach_b {
            self.count_b[key(self.b.element[y], cmp)] = 0;
        }
        for &x in self.matched.iter().chain(&reach_a) {
            self.seen_a[x] = false;
        }
        for &y in &reach_b {
            self.seen_b[y] = false;
        }
        for &x in &self.matched {
            self.seen_b[self.map_a[x]] = false;
        }

        let bound = self.matched.len() + extra;
        if bound != self.best.len() {
            return bound < self.best.len();
        }
        // equal size: prune unless the smallest reachable completion wins
        let mut completion: Vec<usize> = self.matched.clone();
        reach_a.sort_unstable();
        completion.extend(reach_a.into_iter().take(extra));
        completion.sort_unstable();
        !completion.iter().copied().lt(self.best.iter().map(|p| p.0))
    }

    fn frontier(&self) -> Option<usize> {
        self.matched
            .iter()
            .flat_map(|&x| self.a.nbrs[x].iter().copied())
            .filter(|&nb| self.map_a[nb] == NONE && !self.excluded[nb])
            .min()
    }

    fn compatible(&self, x: usize, y: usize) -> bool {
        if self.map_b[y] != NONE || !self.atoms_match(x, y) {
            return false;
        }
        self.matched.iter().all(|&m| self.bonds_match(self.a.bond(x, m), self.b.bond(y, self.map_a[m])))
    }

    fn push(&mut self, x: usize, y: usize) {
        self.map_a[x] = y;
        self.map_b[y] = x;
        self.matched.push(x);
    }

    fn pop(&mut self) {
        let x = self.matched.pop().expect("non-empty match");
        self.map_b[self.map_a[x]] = NONE;
        self.map_a[x] = NONE;
    }

    fn expand(&mut self) {
        if self.out_of_budget() {
            return;
        }
        self.record();
        if self.hopeless() {
            return;
        }
        let Some(x) = self.frontier() else { return };
        // candidates must touch the image of a matched neighbor of x
        let anchor = self.a.nbrs[x].iter().copied().find(|&nb| self.map_a[nb] != NONE).expect("frontier atom");
        let candidates: Vec<usize> = self.b.nbrs[self.map_a[anchor]].clone();
        for y in candidates {
            if self.compatible(x, y) {
                self.push(x, y);
                self.expand();
                self.pop();
                if self.truncated {
                    return;
                }
            }
        }
        self.excluded[x] = true;
        self.expand();
        self.excluded[x] = false;
    }
}

/// Largest connected common substructure of `a` and `b`, matched as an
/// induced subgraph. Among maximum matches the one with the
/// lexicographically smallest sorted `a` atom list is returned. `None`
/// when no atom pair is compatible or no match satisfies the ring rules.
pub fn mcs(a: &MolGraph, b: &MolGraph, opts: &McsOptions) -> Option<McsResult> {
    let (sa, sb) = (Side::new(a), Side::new(b));
    let (na, nb) = (sa.n, sb.n);
    let mut s = Search {
        a: sa,
        b: sb,
        opts,
        map_a: vec![NONE; na],
        map_b: vec![NONE; nb],
        excluded: vec![false; na],
        matched: Vec::new(),
        best: Vec::new(),
        nodes: 0,
        started: Instant::now(),
        truncated: false,
        seen_a: vec![false; na],
        seen_b: vec![false; nb],
        count_a: vec![0; 256],
        count_b: vec![0; 256],
    };
    'seeds: for seed in 0..na {
        // every match found from this seed has `seed` as its smallest atom
        for y in 0..nb {
            if s.atoms_match(seed, y) {
                s.push(seed, y);
                s.expand();
                s.pop();
                if s.truncated {
                    break 'seeds;
                }
            }
        }
        s.excluded[seed] = true;
    }
    if s.best.is_empty() {
        return None;
    }
    let matched_a: Vec<usize> = s.best.iter().map(|p| p.0).collect();
    let matched_b: Vec<usize> = s.best.iter().map(|p| p.1).collect();
    let smarts_like_code = fragment_code(a, &matched_a, false).expect("match is connected");
    Some(McsResult { matched_a, matched_b, smarts_like_code, truncated: s.truncated })
}
