//! Canonical atom ordering.
//!
//! Atoms start in cells keyed by an invariant tuple (element, charge,
//! degree, hydrogens, aromaticity). Cells are refined Morgan-style by the
//! multiset of (neighbor cell, bond order) until stable. Remaining ties are
//! broken by individualizing each atom of the first non-singleton cell in
//! turn, refining again, and keeping the leaf whose relabeled graph is
//! lexicographically smallest. Automorphisms found along the way (two leaves
//! with equal relabeled graphs) prune sibling branches in the same orbit.

use super::BondOrder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct AtomLabel {
    pub element: u8,
    pub charge: i8,
    pub h: u8,
    pub aromatic: bool,
    /// Extra distinguishing mark (e.g. the root of a fingerprint
    /// environment). Zero for ordinary atoms.
    pub class: u16,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct LabeledGraph {
    pub labels: Vec<AtomLabel>,
    pub adj: Vec<Vec<(usize, BondOrder)>>,
}

impl LabeledGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }
}

type Colors = Vec<u32>;

fn initial_colors(g: &LabeledGraph) -> Colors {
    let n = g.len();
    let key = |a: usize| {
        let l = g.labels[a];
        (l.element, l.charge, g.adj[a].len(), l.h, l.aromatic, l.class)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by_key(|&a| key(a));
    let mut colors = vec![0; n];
    let mut c = 0u32;
    for w in 0..n {
        if w > 0 && key(idx[w]) != key(idx[w - 1]) {
            c += 1;
        }
        colors[idx[w]] = c;
    }
    colors
}

fn cell_count(colors: &Colors) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

/// Iterated neighborhood refinement until the number of cells stops growing.
/// Cell order is preserved: a split cell's pieces stay between its
/// neighbors, ordered by signature.
fn refine(g: &LabeledGraph, colors: &mut Colors) {
    let n = g.len();
    if n == 0 {
        return;
    }
    let mut cells = cell_count(colors);
    let mut sigs: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut idx: Vec<usize> = (0..n).collect();
    while cells < n {
        for a in 0..n {
            let sig = &mut sigs[a];
            sig.clear();
            sig.push(u64::from(colors[a]));
            let start = sig.len();
            for &(nb, order) in &g.adj[a] {
                sig.push((u64::from(colors[nb]) << 3) | u64::from(order.code()));
            }
            sig[start..].sort_unstable();
        }
        idx.sort_by(|&x, &y| sigs[x].cmp(&sigs[y]));
        let mut next = vec![0u32; n];
        let mut c = 0u32;
        for w in 0..n {
            if w > 0 && sigs[idx[w]] != sigs[idx[w - 1]] {
                c += 1;
            }
            next[idx[w]] = c;
        }
        let new_cells = c as usize + 1;
        *colors = next;
        if new_cells == cells {
            break;
        }
        cells = new_cells;
    }
}

fn individualize(colors: &Colors, v: usize) -> Colors {
    let c = colors[v];
    colors
        .iter()
        .enumerate()
        .map(|(a, &x)| {
            if x > c || (x == c && a != v) {
                x + 1
            } else {
                x
            }
        })
        .collect()
}

/// The relabeled graph for a discrete coloring: labels in canonical order,
/// then each position's sorted (neighbor position, bond order) list.
fn certificate(g: &LabeledGraph, order: &[usize], rank: &[u32]) -> Vec<u32> {
    let mut cert = Vec::with_capacity(order.len() * 6);
    for &a in order {
        let l = g.labels[a];
        cert.push(u32::from(l.element));
        cert.push((i32::from(l.charge) + 128) as u32);
        cert.push(u32::from(l.h));
        cert.push(u32::from(l.aromatic));
        cert.push(u32::from(l.class));
    }
    let mut row: Vec<u32> = Vec::new();
    for &a in order {
        row.clear();
        row.extend(g.adj[a].iter().map(|&(nb, o)| (rank[nb] << 3) | u32::from(o.code())));
        row.sort_unstable();
        cert.push(row.len() as u32);
        cert.extend_from_slice(&row);
    }
    cert
}

struct Search<'a> {
    g: &'a LabeledGraph,
    best: Option<(Vec<u32>, Vec<usize>)>,
    generators: Vec<Vec<usize>>,
}

const MAX_GENERATORS: usize = 64;

impl Search<'_> {
    fn visit(&mut self, mut colors: Colors, path: &mut Vec<usize>) {
        refine(self.g, &mut colors);
        let n = self.g.len();
        if cell_count(&colors) == n {
            self.leaf(&colors);
            return;
        }
        // first non-singleton cell
        let mut sizes = vec![0usize; n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = sizes.iter().position(|&s| s > 1).expect("non-discrete coloring") as u32;
        let members: Vec<usize> = (0..n).filter(|&a| colors[a] == target).collect();

        let mut explored: Vec<usize> = Vec::new();
        for &v in &members {
            if !explored.is_empty() && self.same_orbit(path, &explored, v) {
                continue;
            }
            path.push(v);
            let child = individualize(&colors, v);
            self.visit(child, path);
            path.pop();
            explored.push(v);
        }
    }

    /// Whether `v` shares an orbit with an explored sibling under the known
    /// automorphisms that fix every atom of `path`.
    fn same_orbit(&self, path: &[usize], explored: &[usize], v: usize) -> bool {
        let n = self.g.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut any = false;
        for gen in &self.generators {
            if path.iter().any(|&a| gen[a] != a) {
                continue;
            }
            any = true;
            for a in 0..n {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, gen[a]));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        if !any {
            return false;
        }
        let rv = find(&mut parent, v);
        explored.iter().any(|&u| find(&mut parent, u) == rv)
    }

    fn leaf(&mut self, colors: &Colors) {
        let n = colors.len();
        let mut order = vec![0usize; n];
        for (a, &c) in colors.iter().enumerate() {
            order[c as usize] = a;
        }
        let cert = certificate(self.g, &order, colors);
        match &self.best {
            None => self.best = Some((cert, order)),
            Some((best_cert, best_order)) => match cert.cmp(best_cert) {
                std::cmp::Ordering::Less => self.best = Some((cert, order)),
                std::cmp::Ordering::Equal => {
                    if self.generators.len() < MAX_GENERATORS {
                        // atom at position p in this leaf maps to the atom at p in the best leaf
                        let mut gen = vec![0usize; n];
                        for p in 0..n {
                            gen[order[p]] = best_order[p];
                        }
                        if gen.iter().enumerate().any(|(a, &b)| a != b) {
                            self.generators.push(gen);
                        }
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

/// Canonical order: `order[p]` is the atom placed at canonical position `p`.
/// Isomorphic labeled graphs yield orders under which they relabel to the
/// identical graph.
pub(crate) fn canonical_order(g: &LabeledGraph) -> Vec<usize> {
    let n = g.len();
    if n == 0 {
        return Vec::new();
    }
    let mut search = Search { g, best: None, generators: Vec::new() };
    search.visit(initial_colors(g), &mut Vec::new());
    search.best.expect("at least one leaf").1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn cert_of(smiles: &str) -> Vec<u32> {
        let g = parse_smiles(smiles).unwrap().labeled();
        let order = canonical_order(&g);
        let mut rank = vec![0u32; order.len()];
        for (p, &a) in order.iter().enumerate() {
            rank[a] = p as u32;
        }
        certificate(&g, &order, &rank)
    }

    #[test]
    fn refinement_splits_chain_ends() {
        let g = parse_smiles("CCCO").unwrap().labeled();
        let mut colors = initial_colors(&g);
        refine(&g, &mut colors);
        assert_eq!(cell_count(&colors), 4);
    }

    #[test]
    fn symmetric_graphs_need_search() {
        // cubane: every atom equivalent, refinement alone cannot split
        let g = parse_smiles("C12C3C4C1C5C2C3C45").unwrap().labeled();
        let mut colors = initial_colors(&g);
        refine(&g, &mut colors);
        assert_eq!(cell_count(&colors), 1);
        let order = canonical_order(&g);
        assert_eq!(order.len(), 8);
    }

    #[test]
    fn regular_non_isomorphic_graphs_differ() {
        // two 2-regular graphs refinement cannot tell apart: C6 ring vs two C3 rings
        assert_ne!(cert_of("C1CCCCC1"), cert_of("C1CC1.C1CC1"));
        // decalin vs bicyclo[4.4.0] written differently is the same graph
        assert_eq!(cert_of("C1CCC2CCCCC2C1"), cert_of("C1CC2CCCCC2CC1"));
    }

    #[test]
    fn highly_symmetric_molecule_terminates() {
        // tri-tert-butyl substituted benzene: large automorphism group
        let g = parse_smiles("CC(C)(C)c1cc(C(C)(C)C)cc(C(C)(C)C)c1").unwrap().labeled();
        let order = canonical_order(&g);
        assert_eq!(order.len(), 18);
    }
}
