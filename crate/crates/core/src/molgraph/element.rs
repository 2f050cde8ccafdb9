use std::fmt;

/// Chemical element, stored as its atomic number. Atomic number 0 is the
/// `*` wildcard used for attachment points; it orders before every real
/// element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

const SYMBOLS: [&str; 87] = [
    "*", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn",
];

impl Element {
    pub const WILDCARD: Element = Element(0);
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        ((z as usize) < SYMBOLS.len()).then_some(Element(z))
    }

    /// Looks up an element by its capitalized symbol (`"Cl"`, not `"cl"`).
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|s| *s == symbol)
            .map(|z| Element(z as u8))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize]
    }

    pub fn is_wildcard(self) -> bool {
        self.0 == 0
    }

    /// Normal valences for organic-subset atoms, lowest first. `None` for
    /// everything that must be written in brackets.
    pub fn organic_valences(self) -> Option<&'static [u8]> {
        Some(match self {
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3, 5],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::CL | Element::BR | Element::I => &[1],
            _ => return None,
        })
    }

    /// Whether the element may be written as a lowercase aromatic atom.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }

    /// The organic-subset element list every vocabulary closes over by default.
    pub fn organic_subset() -> Vec<Element> {
        vec![
            Element::B,
            Element::C,
            Element::N,
            Element::O,
            Element::P,
            Element::S,
            Element::F,
            Element::CL,
            Element::BR,
            Element::I,
        ]
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Implicit hydrogen count an organic-subset atom receives when written
/// without brackets, given the summed order of its bonds (aromatic bonds
/// count 1). `None` means the atom cannot be written in organic form.
///
/// Aromatic atoms reserve one unit of valence for the delocalized bond when
/// the valence allows it, so `c` with two ring bonds carries one H while `o`
/// and `n` with two ring bonds carry none.
pub fn implicit_hydrogens(element: Element, aromatic: bool, bond_sum: u32) -> Option<u8> {
    if element.is_wildcard() {
        return Some(0);
    }
    let valences = element.organic_valences()?;
    let v = valences.iter().copied().map(u32::from).find(|&v| v >= bond_sum)?;
    let h = if aromatic {
        v.saturating_sub(bond_sum + 1)
    } else {
        v - bond_sum
    };
    Some(h as u8)
}
