//! Molecular graphs: SMILES parsing, canonical atom ranking, canonical SMILES
//! and connection-aware fragment codes.
//!
//! Every other module keys motifs on the strings produced here, so the only
//! hard requirement is internal consistency: isomorphic inputs must produce
//! byte-identical strings no matter how their atoms are numbered.

mod canon;
mod element;
mod fragment;
mod smiles;
mod writer;

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

pub(crate) use canon::{canonical_order, AtomLabel, LabeledGraph};
pub use element::{implicit_hydrogens, Element};
pub use fragment::{fragment_code, FragmentCoder};
pub use smiles::{parse_smiles, SmilesError};
pub(crate) use writer::write_smiles;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MolError {
    #[error(transparent)]
    Smiles(#[from] SmilesError),
    #[error("multi-fragment input unsupported ({components} components)")]
    MultiFragment { components: usize },
    #[error("atom subset does not induce a connected subgraph")]
    DisconnectedSubset,
    #[error("atom subset is empty")]
    EmptySubset,
    #[error("atom index {index} out of range for {atoms} atoms")]
    AtomOutOfRange { index: usize, atoms: usize },
    #[error("invalid bond {a}-{b}: {reason}")]
    InvalidBond { a: usize, b: usize, reason: &'static str },
    #[error("molecule has no atoms")]
    Empty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's bond-order sum; aromatic bonds count 1.
    pub fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn all() -> [BondOrder; 4] {
        [BondOrder::Single, BondOrder::Double, BondOrder::Triple, BondOrder::Aromatic]
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    /// Total number of hydrogens attached, whether they were implicit in the
    /// SMILES text or written inside brackets.
    pub explicit_h: u8,
    pub aromatic: bool,
    pub index: usize,
}

impl Atom {
    pub fn new(element: Element, index: usize) -> Self {
        Atom { element, formal_charge: 0, explicit_h: 0, aromatic: false, index }
    }

    pub(crate) fn label(&self) -> AtomLabel {
        AtomLabel {
            element: self.element.atomic_number(),
            charge: self.formal_charge,
            h: self.explicit_h,
            aromatic: self.aromatic,
            class: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond { a, b, order }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// An undirected molecular graph. Atom order is whatever the input used;
/// `canonical_ranks`, once attached by [`canonicalize`], gives each atom its
/// position in the canonical numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    canonical_ranks: Option<Vec<usize>>,
    /// (neighbor, bond index) per atom.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MolGraph {
    pub fn new(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, MolError> {
        let n = atoms.len();
        for (i, atom) in atoms.iter_mut().enumerate() {
            atom.index = i;
        }
        let mut adjacency = vec![Vec::new(); n];
        for (bi, bond) in bonds.iter().enumerate() {
            for end in [bond.a, bond.b] {
                if end >= n {
                    return Err(MolError::AtomOutOfRange { index: end, atoms: n });
                }
            }
            if bond.a == bond.b {
                return Err(MolError::InvalidBond { a: bond.a, b: bond.b, reason: "self loop" });
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb == bond.b) {
                return Err(MolError::InvalidBond { a: bond.a, b: bond.b, reason: "duplicate bond" });
            }
            adjacency[bond.a].push((bond.b, bi));
            adjacency[bond.b].push((bond.a, bi));
        }
        Ok(MolGraph { atoms, bonds, canonical_ranks: None, adjacency })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn canonical_ranks(&self) -> Option<&[usize]> {
        self.canonical_ranks.as_deref()
    }

    /// Neighbors of `atom` with the connecting bond's order.
    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.adjacency[atom].iter().map(move |&(nb, bi)| (nb, self.bonds[bi].order))
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb == b)
            .map(|&(_, bi)| self.bonds[bi].order)
    }

    /// Summed bond order of an atom (aromatic bonds count 1).
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.neighbors(atom).map(|(_, o)| o.valence()).sum()
    }

    /// Connected components as sorted atom lists, ordered by smallest atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.len() <= 1 || self.components().len() == 1
    }

    /// Whether each bond lies on a cycle.
    pub fn ring_bonds(&self) -> Vec<bool> {
        let bridges = self.bridges();
        bridges.into_iter().map(|b| !b).collect()
    }

    /// Whether each atom is incident to at least one ring bond.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let ring = self.ring_bonds();
        let mut out = vec![false; self.atoms.len()];
        for (bi, bond) in self.bonds.iter().enumerate() {
            if ring[bi] {
                out[bond.a] = true;
                out[bond.b] = true;
            }
        }
        out
    }

    /// Per-bond bridge flags (Tarjan low-link, iterative).
    fn bridges(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (atom, parent bond, next adjacency slot)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(top) = stack.last_mut() {
                let (u, parent_bond) = (top.0, top.1);
                if top.2 < self.adjacency[u].len() {
                    let (v, bi) = self.adjacency[u][top.2];
                    top.2 += 1;
                    if bi == parent_bond {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, bi, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[parent_bond] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }

    /// Returns a copy whose atom `i` is this graph's atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> MolGraph {
        assert_eq!(perm.len(), self.atoms.len(), "permutation length mismatch");
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = perm.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(inverse[b.a], inverse[b.b], b.order))
            .collect();
        MolGraph::new(atoms, bonds).expect("permutation preserves validity")
    }

    /// Induced subgraph on `atoms` (kept in the given order). Hydrogen counts
    /// are carried over unchanged.
    pub fn induced_subgraph(&self, atoms: &[usize]) -> MolGraph {
        let mut local = vec![usize::MAX; self.atoms.len()];
        for (i, &a) in atoms.iter().enumerate() {
            local[a] = i;
        }
        let new_atoms = atoms.iter().map(|&a| self.atoms[a].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| local[b.a] != usize::MAX && local[b.b] != usize::MAX)
            .map(|b| Bond::new(local[b.a], local[b.b], b.order))
            .collect();
        MolGraph::new(new_atoms, bonds).expect("induced subgraph is valid")
    }

    pub(crate) fn labeled(&self) -> LabeledGraph {
        LabeledGraph {
            labels: self.atoms.iter().map(Atom::label).collect(),
            adj: (0..self.atoms.len()).map(|a| self.neighbors(a).collect()).collect(),
        }
    }

    /// SMILES in the given atom order (used for random and canonical output).
    pub fn to_smiles_with_ranks(&self, ranks: &[usize]) -> String {
        write_smiles(&self.labeled(), ranks)
    }
}

/// Computes permutation-invariant canonical ranks and the canonical SMILES.
///
/// Multi-fragment graphs are rejected; the serializer downstream needs a
/// single connected component.
pub fn canonicalize(g: &MolGraph) -> Result<(MolGraph, String), MolError> {
    if g.atom_count() == 0 {
        return Err(MolError::Empty);
    }
    let components = g.components().len();
    if components > 1 {
        return Err(MolError::MultiFragment { components });
    }
    let labeled = g.labeled();
    let order = canonical_order(&labeled);
    let mut ranks = vec![0; order.len()];
    for (pos, &atom) in order.iter().enumerate() {
        ranks[atom] = pos;
    }
    let smiles = write_smiles(&labeled, &ranks);
    let mut out = g.clone();
    out.canonical_ranks = Some(ranks);
    Ok((out, smiles))
}

/// Parses and canonicalizes in one step.
pub fn canonical_smiles(text: &str) -> Result<String, MolError> {
    let g = parse_smiles(text)?;
    Ok(canonicalize(&g)?.1)
}
