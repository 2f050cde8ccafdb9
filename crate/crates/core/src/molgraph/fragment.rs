use super::{canonical_order, write_smiles, AtomLabel, LabeledGraph, MolError, MolGraph};

/// Canonical code for a connected atom subset of `g`.
///
/// With `with_connections`, every bond leaving the subset is replaced by a
/// `*` atom attached with the original bond order, so the same substructure
/// attached at different positions gets different codes. Without it, the
/// code is the plain canonical SMILES of the induced subgraph. Hydrogen
/// counts are those of the parent molecule either way.
pub fn fragment_code(g: &MolGraph, atom_subset: &[usize], with_connections: bool) -> Result<String, MolError> {
    FragmentCoder::new(g).code(atom_subset, with_connections)
}

/// Reusable fragment-code builder bound to one molecule. Keeps a scratch
/// index map so repeated codes do not reallocate per call.
pub struct FragmentCoder<'g> {
    g: &'g MolGraph,
    local: Vec<usize>,
}

impl<'g> FragmentCoder<'g> {
    pub fn new(g: &'g MolGraph) -> Self {
        FragmentCoder { g, local: vec![usize::MAX; g.atom_count()] }
    }

    pub fn code(&mut self, atom_subset: &[usize], with_connections: bool) -> Result<String, MolError> {
        let lg = self.build(atom_subset, with_connections, None)?;
        Ok(canonical_smiles_of(&lg))
    }

    /// Code of the subset with `center` marked by an atom class; used for
    /// rooted circular environments.
    pub(crate) fn rooted_code(&mut self, atom_subset: &[usize], center: usize) -> Result<String, MolError> {
        let lg = self.build(atom_subset, true, Some(center))?;
        Ok(canonical_smiles_of(&lg))
    }

    fn build(
        &mut self,
        atom_subset: &[usize],
        with_connections: bool,
        center: Option<usize>,
    ) -> Result<LabeledGraph, MolError> {
        if atom_subset.is_empty() {
            return Err(MolError::EmptySubset);
        }
        let n = self.g.atom_count();
        for &a in atom_subset {
            if a >= n {
                return Err(MolError::AtomOutOfRange { index: a, atoms: n });
            }
        }
        for (i, &a) in atom_subset.iter().enumerate() {
            self.local[a] = i;
        }
        let result = self.build_inner(atom_subset, with_connections, center);
        for &a in atom_subset {
            self.local[a] = usize::MAX;
        }
        result
    }

    fn build_inner(
        &self,
        atom_subset: &[usize],
        with_connections: bool,
        center: Option<usize>,
    ) -> Result<LabeledGraph, MolError> {
        let k = atom_subset.len();
        let mut lg = LabeledGraph {
            labels: Vec::with_capacity(k + 4),
            adj: vec![Vec::new(); k],
        };
        for &a in atom_subset {
            let mut label = self.g.atoms()[a].label();
            if center == Some(a) {
                label.class = 1;
            }
            lg.labels.push(label);
        }
        for (i, &a) in atom_subset.iter().enumerate() {
            for (nb, order) in self.g.neighbors(a) {
                let j = self.local[nb];
                if j != usize::MAX {
                    if i < j {
                        lg.adj[i].push((j, order));
                        lg.adj[j].push((i, order));
                    }
                } else if with_connections {
                    let w = lg.labels.len();
                    lg.labels.push(AtomLabel { element: 0, charge: 0, h: 0, aromatic: false, class: 0 });
                    lg.adj.push(vec![(i, order)]);
                    lg.adj[i].push((w, order));
                }
            }
        }
        // connectivity over the real atoms
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &lg.adj[u] {
                if v < k && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        if count != k {
            return Err(MolError::DisconnectedSubset);
        }
        Ok(lg)
    }
}

pub(crate) fn canonical_smiles_of(lg: &LabeledGraph) -> String {
    let order = canonical_order(lg);
    let mut rank = vec![0usize; order.len()];
    for (p, &a) in order.iter().enumerate() {
        rank[a] = p;
    }
    write_smiles(lg, &rank)
}
