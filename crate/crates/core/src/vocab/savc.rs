//! Single-atom vocabulary closure: every element gets a standalone token, a
//! fallback alternate-form token, and one connection-aware token per
//! (valence, attachment pattern).

use std::collections::{BTreeMap, HashSet};

use super::{MotifToken, TokenKind, VocabError};
use crate::molgraph::{fragment_code, Atom, Bond, BondOrder, Element, MolGraph};

pub type ValenceTable = BTreeMap<Element, Vec<u8>>;

pub const DEFAULT_ELEMENTS: [&str; 10] = ["B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"];

/// Organic-subset valences for the default elements.
pub fn default_valence_table() -> ValenceTable {
    DEFAULT_ELEMENTS
        .iter()
        .map(|s| {
            let e = Element::from_symbol(s).expect("known element");
            (e, e.organic_valences().expect("organic element").to_vec())
        })
        .collect()
}

pub fn default_savc() -> Vec<MotifToken> {
    let elements: Vec<Element> = DEFAULT_ELEMENTS.iter().map(|s| Element::from_symbol(s).unwrap()).collect();
    build_savc(&elements, &default_valence_table(), &BondOrder::all()).expect("default table covers defaults")
}

pub(crate) fn altform_code(element: Element) -> String {
    format!("[{}_AltForm]", element.symbol())
}

/// Enumerates the closure for `elements` in order. Ids are positional
/// (0-based) within the returned list; the vocabulary renumbers them.
///
/// Non-aromatic forms: every multiset of non-aromatic bond orders whose
/// total does not exceed the valence, with hydrogens filling the rest.
/// Aromatic forms (aromatic-capable elements only): two or three aromatic
/// bonds plus any non-aromatic extras, with either hydrogen count a parser
/// could assign. Charged states are not enumerated; they reach the
/// alternate-form token.
pub fn build_savc(
    elements: &[Element],
    valence_table: &ValenceTable,
    bond_types: &[BondOrder],
) -> Result<Vec<MotifToken>, VocabError> {
    let mut out: Vec<MotifToken> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut push = |out: &mut Vec<MotifToken>, kind: TokenKind, no_conn: String, with_conn: String| {
        if seen.insert(with_conn.clone()) {
            out.push(MotifToken { id: out.len() as u32, kind, no_conn, with_conn });
        }
    };
    let plain: Vec<BondOrder> = bond_types.iter().copied().filter(|&o| o != BondOrder::Aromatic).collect();
    let aromatic = bond_types.contains(&BondOrder::Aromatic);

    for &element in elements {
        let valences = valence_table
            .get(&element)
            .ok_or_else(|| VocabError::MissingValence(element.symbol().to_owned()))?;
        let standalone = format!("[{}]", element.symbol());
        push(&mut out, TokenKind::Sav, standalone.clone(), standalone);
        let alt = altform_code(element);
        push(&mut out, TokenKind::SavAltform, alt.clone(), alt);

        for &v in valences {
            let v = u32::from(v);
            for extras in multisets(&plain, v) {
                let sum: u32 = extras.iter().map(|o| o.valence()).sum();
                let (no_conn, with_conn) = single_atom_codes(element, false, (v - sum) as u8, &extras);
                push(&mut out, TokenKind::Sav, no_conn, with_conn);
            }
            if aromatic && element.can_be_aromatic() {
                for ring_bonds in 2..=3u32 {
                    if ring_bonds > v {
                        continue;
                    }
                    for extras in multisets(&plain, v - ring_bonds) {
                        let mut bonds = vec![BondOrder::Aromatic; ring_bonds as usize];
                        bonds.extend_from_slice(&extras);
                        let s: u32 = bonds.iter().map(|o| o.valence()).sum();
                        let mut hs = vec![(v - s).saturating_sub(1), v - s];
                        hs.dedup();
                        for h in hs {
                            let (no_conn, with_conn) = single_atom_codes(element, true, h as u8, &bonds);
                            push(&mut out, TokenKind::Sav, no_conn, with_conn);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All multisets over `orders` (as non-decreasing sequences) with total
/// valence at most `budget`, starting with the empty one.
fn multisets(orders: &[BondOrder], budget: u32) -> Vec<Vec<BondOrder>> {
    fn go(orders: &[BondOrder], start: usize, budget: u32, cur: &mut Vec<BondOrder>, out: &mut Vec<Vec<BondOrder>>) {
        out.push(cur.clone());
        for i in start..orders.len() {
            let cost = orders[i].valence();
            if cost <= budget {
                cur.push(orders[i]);
                go(orders, i, budget - cost, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(orders, 0, budget, &mut Vec::new(), &mut out);
    out
}

fn single_atom_codes(element: Element, aromatic: bool, h: u8, bonds: &[BondOrder]) -> (String, String) {
    let mut center = Atom::new(element, 0);
    center.aromatic = aromatic;
    center.explicit_h = h;
    let mut atoms = vec![center];
    let mut edges = Vec::new();
    for (i, &order) in bonds.iter().enumerate() {
        atoms.push(Atom::new(Element::WILDCARD, i + 1));
        edges.push(Bond::new(0, i + 1, order));
    }
    let g = MolGraph::new(atoms, edges).expect("star graph is valid");
    (
        fragment_code(&g, &[0], false).expect("single atom"),
        fragment_code(&g, &[0], true).expect("single atom"),
    )
}
