use crate::molgraph::{Atom, Bond, BondOrder, Element, MolGraph};

/// Ring systems plus linkers: non-ring atoms of degree at most one are
/// removed until none remain. Each removed bond's valence moves onto the
/// surviving neighbor as hydrogens. Acyclic input yields the empty graph.
pub fn murcko_scaffold(g: &MolGraph) -> MolGraph {
    let n = g.atom_count();
    let ring = g.ring_atoms();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|a| g.degree(a)).collect();
    let mut extra_h = vec![0u32; n];
    let mut stack: Vec<usize> = (0..n).filter(|&a| !ring[a] && degree[a] <= 1).collect();
    while let Some(a) = stack.pop() {
        if !alive[a] {
            continue;
        }
        alive[a] = false;
        for (nb, order) in g.neighbors(a) {
            if alive[nb] {
                degree[nb] -= 1;
                extra_h[nb] += order.valence();
                if !ring[nb] && degree[nb] <= 1 {
                    stack.push(nb);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&a| alive[a]).collect();
    let mut scaffold = g.induced_subgraph(&keep);
    if extra_h.iter().any(|&h| h > 0) {
        let atoms: Vec<Atom> = keep
            .iter()
            .map(|&a| {
                let mut atom = g.atoms()[a].clone();
                atom.explicit_h = atom.explicit_h.saturating_add(extra_h[a].min(255) as u8);
                atom
            })
            .collect();
        scaffold = MolGraph::new(atoms, scaffold.bonds().to_vec()).expect("same bonds");
    }
    scaffold
}

/// Murcko scaffold with every atom made a neutral sp3 carbon and every bond
/// single.
pub fn generic_murcko_scaffold(g: &MolGraph) -> MolGraph {
    let s = murcko_scaffold(g);
    let atoms: Vec<Atom> = (0..s.atom_count())
        .map(|a| {
            let mut atom = Atom::new(Element::C, a);
            atom.explicit_h = 4u8.saturating_sub(s.degree(a) as u8);
            atom
        })
        .collect();
    let bonds = s.bonds().iter().map(|b| Bond::new(b.a, b.b, BondOrder::Single)).collect();
    MolGraph::new(atoms, bonds).expect("same topology")
}
