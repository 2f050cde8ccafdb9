use std::collections::BTreeMap;

use log::warn;
use thiserror::Error;

use super::{implicit_hydrogens, Atom, Bond, BondOrder, Element, MolError, MolGraph};

/// SMILES parse failure; `offset` is a byte offset into the input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unbalanced parenthesis at offset {offset}")]
    UnbalancedParenthesis { offset: usize },
    #[error("unmatched ring-closure digit {digit} at offset {offset}")]
    UnmatchedRingClosure { digit: u32, offset: usize },
    #[error("unknown element symbol {symbol:?} at offset {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("valence overflow on {element} at offset {offset}")]
    ValenceOverflow { element: String, offset: usize },
    #[error("unexpected character {ch:?} at offset {offset}")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("bond symbol at offset {offset} is not followed by an atom")]
    DanglingBond { offset: usize },
    #[error("unterminated bracket atom at offset {offset}")]
    UnterminatedBracket { offset: usize },
    #[error("conflicting ring-closure bond orders for digit {digit} at offset {offset}")]
    RingBondConflict { digit: u32, offset: usize },
    #[error("invalid bond at offset {offset}: {reason}")]
    InvalidBond { offset: usize, reason: &'static str },
}

struct OpenRing {
    atom: usize,
    bond: Option<BondOrder>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    /// Byte offset and whether the atom was written in organic (bare) form.
    atom_meta: Vec<(usize, bool)>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending: Option<(BondOrder, usize)>,
    branches: Vec<(Option<usize>, usize)>,
    rings: BTreeMap<u32, OpenRing>,
    stripped_stereo: bool,
}

/// Parses a single SMILES string into a [`MolGraph`].
///
/// Supported: the organic subset (`B C N O P S F Cl Br I`, lowercase
/// aromatic forms, `*`), bracket atoms with charge and hydrogen count,
/// branches, ring closures (`1`-`9`, `%nn`), explicit bonds `- = # :` and
/// `.` separated components. Stereo marks and isotopes are dropped with a
/// warning.
pub fn parse_smiles(text: &str) -> Result<MolGraph, SmilesError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_meta: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
        stripped_stereo: false,
    };
    p.run()?;
    if p.stripped_stereo {
        warn!("stereochemistry stripped from {text:?}");
    }
    p.finish()
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(SmilesError::UnexpectedChar { ch: '(', offset });
                    }
                    self.branches.push((self.prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    if let Some((_, offset)) = self.pending {
                        return Err(SmilesError::DanglingBond { offset });
                    }
                    let (prev, _) = self
                        .branches
                        .pop()
                        .ok_or(SmilesError::UnbalancedParenthesis { offset })?;
                    self.prev = prev;
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, off)) = self.pending {
                        return Err(SmilesError::DanglingBond { offset: off });
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::UnexpectedChar { ch: c as char, offset });
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        b'/' | b'\\' => {
                            self.stripped_stereo = true;
                            BondOrder::Single
                        }
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, offset));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, offset, false)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, offset, true)?;
                }
            }
        }
        if let Some((_, offset)) = self.pending {
            return Err(SmilesError::DanglingBond { offset });
        }
        if let Some(&(_, offset)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParenthesis { offset });
        }
        if let Some((&digit, ring)) = self.rings.iter().next() {
            return Err(SmilesError::UnmatchedRingClosure { digit, offset: ring.offset });
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize, organic: bool) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(Atom { index: idx, ..atom });
        self.atom_meta.push((offset, organic));
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((o, _)) => o,
                None => self.default_order(prev, idx),
            };
            self.push_bond(prev, idx, order, offset)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn push_bond(&mut self, a: usize, b: usize, order: BondOrder, offset: usize) -> Result<(), SmilesError> {
        if a == b {
            return Err(SmilesError::InvalidBond { offset, reason: "atom bonded to itself" });
        }
        if self.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(SmilesError::InvalidBond { offset, reason: "duplicate bond" });
        }
        self.bonds.push(Bond::new(a, b, order));
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let offset = self.pos;
        let digit = if self.peek() == Some(b'%') {
            let d = self.text.get(self.pos + 1..self.pos + 3);
            match d {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0')
                }
                _ => return Err(SmilesError::UnexpectedChar { ch: '%', offset }),
            }
        } else {
            let d = u32::from(self.text[self.pos] - b'0');
            self.pos += 1;
            d
        };
        let atom = self.prev.ok_or(SmilesError::UnexpectedChar {
            ch: self.text[offset] as char,
            offset,
        })?;
        let bond = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(digit, OpenRing { atom, bond, offset });
            }
            Some(open) => {
                let order = match (open.bond, bond) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(SmilesError::RingBondConflict { digit, offset })
                    }
                    (Some(x), _) | (None, Some(x)) => x,
                    (None, None) => self.default_order(open.atom, atom),
                };
                self.push_bond(open.atom, atom, order, offset)?;
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let c = self.text[self.pos];
        let next = self.text.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'B', Some(b'r')) => (Element::BR, false, 2),
            (b'C', Some(b'l')) => (Element::CL, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            (b'*', _) => (Element::WILDCARD, false, 1),
            _ if c.is_ascii_alphabetic() => {
                let end = if next.is_some_and(|n| n.is_ascii_lowercase()) { 2 } else { 1 };
                let symbol = String::from_utf8_lossy(&self.text[offset..offset + end]).into_owned();
                return Err(SmilesError::UnknownElement { symbol, offset });
            }
            _ => return Err(SmilesError::UnexpectedChar { ch: c as char, offset }),
        };
        self.pos += len;
        let mut atom = Atom::new(element, 0);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        let close = self.text[open..]
            .iter()
            .position(|&c| c == b']')
            .map(|i| open + i)
            .ok_or(SmilesError::UnterminatedBracket { offset: open })?;
        let body = &self.text[open + 1..close];
        let mut i = 0;
        let at = |i: usize| body.get(i).copied();

        // isotope
        let iso_start = i;
        while at(i).is_some_and(|c| c.is_ascii_digit()) {
            i += 1;
        }
        if i > iso_start {
            warn!("isotope label stripped at offset {}", open + 1);
        }

        // element symbol
        let sym_offset = open + 1 + i;
        let (element, aromatic) = match at(i) {
            Some(b'*') => {
                i += 1;
                (Element::WILDCARD, false)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let two = at(i + 1).filter(|n| n.is_ascii_lowercase()).and_then(|n| {
                    let s = format!("{}{}", c as char, n as char);
                    Element::from_symbol(&s)
                });
                match two {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => {
                        let s = (c as char).to_string();
                        let e = Element::from_symbol(&s)
                            .ok_or(SmilesError::UnknownElement { symbol: s, offset: sym_offset })?;
                        i += 1;
                        (e, false)
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = at(i + 1).filter(|n| n.is_ascii_lowercase()).and_then(|n| {
                    let s = format!("{}{}", c.to_ascii_uppercase() as char, n as char);
                    Element::from_symbol(&s).filter(|e| e.can_be_aromatic())
                });
                match two {
                    Some(e) => {
                        i += 2;
                        (e, true)
                    }
                    None => {
                        let s = (c.to_ascii_uppercase() as char).to_string();
                        let e = Element::from_symbol(&s).filter(|e| e.can_be_aromatic()).ok_or(
                            SmilesError::UnknownElement {
                                symbol: (c as char).to_string(),
                                offset: sym_offset,
                            },
                        )?;
                        i += 1;
                        (e, true)
                    }
                }
            }
            Some(c) => {
                return Err(SmilesError::UnexpectedChar { ch: c as char, offset: sym_offset })
            }
            None => return Err(SmilesError::UnexpectedChar { ch: ']', offset: close }),
        };

        // chirality
        if at(i) == Some(b'@') {
            self.stripped_stereo = true;
            while at(i) == Some(b'@') {
                i += 1;
            }
            if at(i).is_some_and(|c| c.is_ascii_uppercase() && c != b'H') {
                while at(i).is_some_and(|c| c.is_ascii_alphanumeric() && c != b'H') {
                    i += 1;
                }
            }
        }

        // hydrogens
        let mut h = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            h = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                h = d - b'0';
                i += 1;
            }
        }

        // charge
        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                let mut mag = i32::from(d - b'0');
                i += 1;
                if let Some(d2) = at(i).filter(u8::is_ascii_digit) {
                    mag = mag * 10 + i32::from(d2 - b'0');
                    i += 1;
                }
                charge = unit * mag;
            } else {
                charge = unit;
                while at(i) == Some(sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }

        // atom class (ignored)
        if at(i) == Some(b':') {
            i += 1;
            while at(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
        }

        if i != body.len() {
            let offset = open + 1 + i;
            return Err(SmilesError::UnexpectedChar { ch: body[i] as char, offset });
        }
        self.pos = close + 1;
        let mut atom = Atom::new(element, 0);
        atom.aromatic = aromatic;
        atom.explicit_h = h;
        atom.formal_charge = charge.clamp(i8::MIN as i32, i8::MAX as i32) as i8;
        Ok(atom)
    }

    fn finish(mut self) -> Result<MolGraph, SmilesError> {
        let mut sums = vec![0u32; self.atoms.len()];
        for b in &self.bonds {
            sums[b.a] += b.order.valence();
            sums[b.b] += b.order.valence();
        }
        for (i, atom) in self.atoms.iter_mut().enumerate() {
            let (offset, organic) = self.atom_meta[i];
            if !organic {
                continue;
            }
            atom.explicit_h = implicit_hydrogens(atom.element, atom.aromatic, sums[i]).ok_or_else(|| {
                SmilesError::ValenceOverflow { element: atom.element.symbol().to_string(), offset }
            })?;
        }
        MolGraph::new(self.atoms, self.bonds).map_err(|e| match e {
            MolError::InvalidBond { reason, .. } => SmilesError::InvalidBond { offset: 0, reason },
            _ => SmilesError::InvalidBond { offset: 0, reason: "malformed graph" },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bonds().len(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        let h: Vec<u8> = g.atoms().iter().map(|a| a.explicit_h).collect();
        assert_eq!(h, vec![3, 2, 1]);
        let el: Vec<&str> = g.atoms().iter().map(|a| a.element.symbol()).collect();
        assert_eq!(el, vec!["C", "C", "O"]);
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic && a.element == Element::C && a.explicit_h == 1));
        assert_eq!(g.bonds().len(), 6);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(g.components().len(), 1);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse_smiles("C(").unwrap_err(), SmilesError::UnbalancedParenthesis { offset: 1 });
        assert_eq!(parse_smiles("CC)C").unwrap_err(), SmilesError::UnbalancedParenthesis { offset: 2 });
        assert_eq!(
            parse_smiles("C1CC").unwrap_err(),
            SmilesError::UnmatchedRingClosure { digit: 1, offset: 1 }
        );
        assert_eq!(
            parse_smiles("CXC").unwrap_err(),
            SmilesError::UnknownElement { symbol: "X".into(), offset: 1 }
        );
        assert_eq!(
            parse_smiles("C[Xx]").unwrap_err(),
            SmilesError::UnknownElement { symbol: "X".into(), offset: 2 }
        );
        assert_eq!(
            parse_smiles("CC(C)(C)(C)C").unwrap_err(),
            SmilesError::ValenceOverflow { element: "C".into(), offset: 1 }
        );
        assert_eq!(parse_smiles("CC=").unwrap_err(), SmilesError::DanglingBond { offset: 2 });
        assert_eq!(parse_smiles("").unwrap_err(), SmilesError::Empty);
        assert!(matches!(parse_smiles("C[C"), Err(SmilesError::UnterminatedBracket { offset: 1 })));
    }

    #[test]
    fn errors_are_distinct_kinds() {
        let kinds = ["C(", "C1CC", "CQ", "FC(F)(F)(F)F"]
            .iter()
            .map(|s| std::mem::discriminant(&parse_smiles(s).unwrap_err()))
            .collect::<std::collections::HashSet<_>>();
        assert_eq!(kinds.len(), 4);
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[NH4+]").unwrap();
        let a = &g.atoms()[0];
        assert_eq!((a.element, a.explicit_h, a.formal_charge), (Element::N, 4, 1));
        let g = parse_smiles("[O-]C(=O)C").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, -1);
        assert_eq!(g.atoms()[0].explicit_h, 0);
        let g = parse_smiles("[Fe++]").unwrap();
        assert_eq!(g.atoms()[0].formal_charge, 2);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(g.atoms()[3].explicit_h, 1);
        assert!(g.atoms()[3].aromatic);
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert!(g.atoms()[0].aromatic);
        assert_eq!(g.atoms()[0].element.symbol(), "Se");
        let g = parse_smiles("[Cl-]").unwrap();
        assert_eq!(g.atoms()[0].element, Element::CL);
    }

    #[test]
    fn stereo_and_isotopes_are_stripped() {
        let g = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(g.bonds()[0].order, BondOrder::Single);
        let g = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(g.atoms()[1].explicit_h, 1);
        let g = parse_smiles("[13CH4]").unwrap();
        assert_eq!(g.atoms()[0].explicit_h, 4);
    }

    #[test]
    fn ring_closures() {
        let g = parse_smiles("C1CC=1").unwrap();
        assert_eq!(g.bond_between(0, 2), Some(BondOrder::Double));
        let g = parse_smiles("C%12CC%12").unwrap();
        assert_eq!(g.bonds().len(), 3);
        assert!(matches!(parse_smiles("C=1CC#1"), Err(SmilesError::RingBondConflict { .. })));
        // aromatic atoms joined by an explicit single bond
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bond_between(5, 6), Some(BondOrder::Single));
        // reuse of a closed digit
        let g = parse_smiles("C1CC1C1CC1").unwrap();
        assert_eq!(g.bonds().len(), 7);
    }

    #[test]
    fn wildcards_and_dots() {
        let g = parse_smiles("*C*").unwrap();
        assert_eq!(g.atoms()[1].explicit_h, 2);
        assert!(g.atoms()[0].element.is_wildcard());
        let g = parse_smiles("*:c(:*)").unwrap();
        assert_eq!(g.atoms()[1].explicit_h, 1);
        let g = parse_smiles("C.[Na+]").unwrap();
        assert_eq!(g.components().len(), 2);
    }
}
