use serde::{Deserialize, Serialize};

use crate::encoder::ExplainEncoding;
use crate::molgraph::MolGraph;
use crate::simil::{mcs, McsOptions};
use crate::vocab::SPECIAL_COUNT;

/// Shared (MCS) and differential atoms of a molecule pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentLabels {
    pub shared_a: Vec<usize>,
    pub diff_a: Vec<usize>,
    pub shared_b: Vec<usize>,
    pub diff_b: Vec<usize>,
    /// Ordered (a, b) atom correspondence of the match.
    pub atom_map: Option<Vec<(usize, usize)>>,
    /// The search gave up; every atom is treated as differential.
    pub mcs_truncated: bool,
}

impl FragmentLabels {
    /// Larger differential atom count of the two sides.
    pub fn edit_size(&self) -> usize {
        self.diff_a.len().max(self.diff_b.len())
    }
}

/// Without a complete match, all atoms are differential.
pub fn fragment_labels(a: &MolGraph, b: &MolGraph, opts: &McsOptions) -> FragmentLabels {
    let found = mcs(a, b, opts);
    let truncated = found.as_ref().is_some_and(|r| r.truncated);
    let (shared_a, shared_b, atom_map) = match found {
        Some(r) if !r.truncated => {
            let map = r.matched_a.iter().copied().zip(r.matched_b.iter().copied()).collect();
            let mut sb = r.matched_b.clone();
            sb.sort_unstable();
            (r.matched_a, sb, Some(map))
        }
        _ => (Vec::new(), Vec::new(), None),
    };
    let complement = |n: usize, shared: &[usize]| {
        let mut in_shared = vec![false; n];
        for &x in shared {
            in_shared[x] = true;
        }
        (0..n).filter(|&x| !in_shared[x]).collect::<Vec<_>>()
    };
    FragmentLabels {
        diff_a: complement(a.atom_count(), &shared_a),
        diff_b: complement(b.atom_count(), &shared_b),
        shared_a,
        shared_b,
        atom_map,
        mcs_truncated: truncated,
    }
}

/// Token t is differential iff its atom set meets `diff_atoms`; specials
/// never are.
pub fn token_diff_mask(explain: &ExplainEncoding, diff_atoms: &[usize]) -> Vec<bool> {
    let limit = explain.atom_sets.iter().flatten().copied().max().map_or(0, |m| m + 1).max(
        diff_atoms.iter().copied().max().map_or(0, |m| m + 1),
    );
    let mut is_diff = vec![false; limit];
    for &x in diff_atoms {
        is_diff[x] = true;
    }
    explain
        .token_ids
        .iter()
        .zip(&explain.atom_sets)
        .map(|(&id, atoms)| id >= SPECIAL_COUNT && atoms.iter().any(|&x| is_diff[x]))
        .collect()
}

/// Labels for a pair plus the token masks of both explain encodings, which
/// must come from the same atom numbering as `a` and `b`.
pub fn label_fragments(
    a: &MolGraph,
    b: &MolGraph,
    explain_a: &ExplainEncoding,
    explain_b: &ExplainEncoding,
    opts: &McsOptions,
) -> (FragmentLabels, Vec<bool>, Vec<bool>) {
    let labels = fragment_labels(a, b, opts);
    let da = token_diff_mask(explain_a, &labels.diff_a);
    let db = token_diff_mask(explain_b, &labels.diff_b);
    (labels, da, db)
}
