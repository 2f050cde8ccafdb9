use std::collections::HashMap;
use std::fmt::Write;

use super::{implicit_hydrogens, BondOrder, Element, LabeledGraph};

/// Writes SMILES for `g`, traversing depth-first from the lowest-ranked atom
/// of each component and visiting neighbors in ascending rank. The output is
/// a function of the ranked graph only, so isomorphic graphs under canonical
/// ranks produce identical strings.
///
/// Atoms are written bare whenever re-parsing would reproduce their
/// hydrogen count exactly; otherwise they are bracketed.
pub(crate) fn write_smiles(g: &LabeledGraph, rank: &[usize]) -> String {
    let n = g.len();
    let mut sorted_adj: Vec<Vec<(usize, BondOrder)>> = g.adj.clone();
    for list in &mut sorted_adj {
        list.sort_by_key(|&(nb, _)| rank[nb]);
    }
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by_key(|&a| rank[a]);

    // pass 1: DFS tree and ring-closure bonds
    let mut visited = vec![false; n];
    let mut children: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
    // per atom: (partner, bond order, is_opening)
    let mut closures: Vec<Vec<(usize, BondOrder, bool)>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    let mut on_path = vec![false; n];
    for &root in &by_rank {
        if visited[root] {
            continue;
        }
        roots.push(root);
        // (atom, parent, next slot)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        visited[root] = true;
        on_path[root] = true;
        while let Some(top) = stack.last_mut() {
            let (u, parent) = (top.0, top.1);
            if top.2 < sorted_adj[u].len() {
                let (v, order) = sorted_adj[u][top.2];
                top.2 += 1;
                if v == parent {
                    continue;
                }
                if !visited[v] {
                    visited[v] = true;
                    on_path[v] = true;
                    children[u].push((v, order));
                    stack.push((v, u, 0));
                } else if on_path[v] {
                    // back edge to an ancestor: the ancestor opens, u closes
                    closures[v].push((u, order, true));
                    closures[u].push((v, order, false));
                }
            } else {
                on_path[u] = false;
                stack.pop();
            }
        }
    }

    // openings at an ancestor are listed in the order their closing atoms
    // are reached, which is DFS preorder; sort by that.
    let mut preorder = vec![0usize; n];
    {
        let mut counter = 0;
        let mut stack: Vec<usize> = roots.iter().rev().copied().collect();
        while let Some(u) = stack.pop() {
            preorder[u] = counter;
            counter += 1;
            for &(c, _) in children[u].iter().rev() {
                stack.push(c);
            }
        }
    }
    for list in &mut closures {
        list.sort_by_key(|&(partner, _, opening)| (!opening, preorder[partner]));
    }

    let mut emitter = Emitter {
        g,
        children: &children,
        closures: &closures,
        digits_in_use: [false; 100],
        open_digit: HashMap::new(),
        out: String::with_capacity(n * 3),
    };
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            emitter.out.push('.');
        }
        emitter.branch(root);
    }
    emitter.out
}

struct Emitter<'a> {
    g: &'a LabeledGraph,
    children: &'a [Vec<(usize, BondOrder)>],
    closures: &'a [Vec<(usize, BondOrder, bool)>],
    digits_in_use: [bool; 100],
    open_digit: HashMap<(usize, usize), usize>,
    out: String,
}

impl Emitter<'_> {
    fn branch(&mut self, u: usize) {
        write_atom(self.g, u, &mut self.out);
        // closings first, then openings; a digit closed here is only
        // reusable after this atom
        let mut freed = Vec::new();
        for &(partner, _, opening) in &self.closures[u] {
            if !opening {
                let d = self.open_digit.remove(&(partner, u)).expect("ring opened before close");
                write_digit(d, &mut self.out);
                freed.push(d);
            }
        }
        for &(partner, order, opening) in &self.closures[u] {
            if opening {
                let d = (1..100).find(|&d| !self.digits_in_use[d]).expect("ring digits exhausted");
                self.digits_in_use[d] = true;
                self.open_digit.insert((u, partner), d);
                self.out.push_str(bond_symbol(self.g, u, partner, order));
                write_digit(d, &mut self.out);
            }
        }
        for d in freed {
            self.digits_in_use[d] = false;
        }
        let kids = &self.children[u];
        for (i, &(c, order)) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                self.out.push('(');
            }
            self.out.push_str(bond_symbol(self.g, u, c, order));
            self.branch(c);
            if !last {
                self.out.push(')');
            }
        }
    }
}

fn write_digit(d: usize, out: &mut String) {
    if d < 10 {
        out.push((b'0' + d as u8) as char);
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

fn bond_symbol(g: &LabeledGraph, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = g.labels[a].aromatic && g.labels[b].aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn write_atom(g: &LabeledGraph, a: usize, out: &mut String) {
    let label = g.labels[a];
    let element = Element::from_atomic_number(label.element).expect("valid element");
    let symbol = element.symbol();
    let bond_sum: u32 = g.adj[a].iter().map(|&(_, o)| o.valence()).sum();
    let bare = label.charge == 0
        && label.class == 0
        && (!label.aromatic || element.can_be_aromatic())
        && implicit_hydrogens(element, label.aromatic, bond_sum) == Some(label.h);
    let bare = bare && (element.is_wildcard() || element.organic_valences().is_some());
    if bare {
        if label.aromatic {
            out.push_str(&symbol.to_ascii_lowercase());
        } else {
            out.push_str(symbol);
        }
        return;
    }
    out.push('[');
    if label.aromatic {
        out.push_str(&symbol.to_ascii_lowercase());
    } else {
        out.push_str(symbol);
    }
    match label.h {
        0 => {}
        1 => out.push('H'),
        h => {
            let _ = write!(out, "H{h}");
        }
    }
    match label.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    if label.class != 0 {
        let _ = write!(out, ":{}", label.class);
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use crate::molgraph::{canonical_smiles, parse_smiles};

    fn identity_smiles(s: &str) -> String {
        let g = parse_smiles(s).unwrap();
        let ranks: Vec<usize> = (0..g.atom_count()).collect();
        g.to_smiles_with_ranks(&ranks)
    }

    #[test]
    fn round_trips_simple_input() {
        assert_eq!(identity_smiles("CCO"), "CCO");
        assert_eq!(identity_smiles("CC(C)O"), "CC(C)O");
        assert_eq!(identity_smiles("CC(=O)O"), "CC(=O)O");
        assert_eq!(identity_smiles("c1ccccc1"), "c1ccccc1");
        assert_eq!(identity_smiles("C(C)(C)(C)C"), "C(C)(C)(C)C");
        assert_eq!(identity_smiles("[NH4+]"), "[NH4+]");
        assert_eq!(identity_smiles("c1cc[nH]c1"), "c1cc[nH]c1");
        assert_eq!(identity_smiles("c1ccccc1-c1ccccc1"), "c1ccccc1-c1ccccc1");
        assert_eq!(identity_smiles("*C*"), "*C*");
        assert_eq!(identity_smiles("[CH2]"), "[CH2]");
        assert_eq!(identity_smiles("C.[Na+]"), "C.[Na+]");
    }

    #[test]
    fn aromatic_cut_bonds_are_explicit() {
        let s = identity_smiles("*:c:*");
        assert_eq!(s, "*:c:*");
    }

    #[test]
    fn random_orders_reparse_to_same_molecule() {
        let smi = "CC(=O)Nc1ccc(O)cc1C1CC2CCC1N2";
        let g = parse_smiles(smi).unwrap();
        let reference = canonical_smiles(smi).unwrap();
        let n = g.atom_count();
        for shift in 0..n {
            let ranks: Vec<usize> = (0..n).map(|i| (i * 7 + shift) % n).collect();
            let text = g.to_smiles_with_ranks(&ranks);
            assert_eq!(canonical_smiles(&text).unwrap(), reference, "{text}");
        }
    }
}
