//! Deterministic molecule generators for tests, benchmarks and acceptance
//! runs. Nothing here tries to be chemically meaningful beyond keeping
//! valences legal; the drug-like generator just glues ring systems and
//! common substituents together at hydrogen-bearing atoms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::molgraph::{parse_smiles, Atom, Bond, BondOrder, Element, MolGraph};

const CORES: &[&str] = &[
    "c1ccccc1",
    "c1ccncc1",
    "c1ccsc1",
    "c1ccoc1",
    "c1cc[nH]c1",
    "c1cn[nH]c1",
    "c1ncncn1",
    "C1CCCCC1",
    "C1CCNCC1",
    "C1COCCN1",
    "C1CCCC1",
    "C1CC1",
    "c1ccc2ccccc2c1",
    "c1ccc2[nH]ccc2c1",
    "c1ccc2ncccc2c1",
    "O=C1CCCN1",
    "C1CNCCN1",
];

const SUBSTITUENTS: &[&str] = &[
    "C",
    "C",
    "CC",
    "O",
    "N",
    "F",
    "Cl",
    "Br",
    "I",
    "C(=O)O",
    "C#N",
    "C(=O)N",
    "OC",
    "S(=O)(=O)N",
    "C(F)(F)F",
    "N(C)C",
    "C=O",
    "[N+](=O)[O-]",
    "NC(C)=O",
    "CC(C)C",
    "OCC(=O)O",
    "B(O)O",
    "P(=O)(O)O",
    "SC",
    "C=C",
    "C#C",
    "c1ccccc1",
    "c1ccncc1",
    "C1CCNCC1",
    "C1CC1",
    "C1CCOC1",
];

/// Generates connected drug-like molecules from a fixed seed.
pub struct MoleculeGenerator {
    rng: ChaCha8Rng,
    cores: Vec<MolGraph>,
    substituents: Vec<MolGraph>,
}

impl MoleculeGenerator {
    pub fn new(seed: u64) -> Self {
        let parse = |list: &[&str]| list.iter().map(|s| parse_smiles(s).expect("building block parses")).collect();
        MoleculeGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            cores: parse(CORES),
            substituents: parse(SUBSTITUENTS),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A molecule with at most `max_atoms` heavy atoms (at least one).
    pub fn molecule(&mut self, max_atoms: usize) -> MolGraph {
        let max_atoms = max_atoms.max(1);
        let target = self.rng.gen_range(max_atoms.clamp(1, 6)..=max_atoms);
        let fitting: Vec<usize> = (0..self.cores.len()).filter(|&i| self.cores[i].atom_count() <= target).collect();
        let mut mol = if fitting.is_empty() {
            let fitting: Vec<usize> =
                (0..self.substituents.len()).filter(|&i| self.substituents[i].atom_count() <= target).collect();
            let pick = *fitting.choose(&mut self.rng).expect("a one-atom block exists");
            self.substituents[pick].clone()
        } else {
            self.cores[*fitting.choose(&mut self.rng).unwrap()].clone()
        };
        let mut failures = 0;
        while mol.atom_count() < target && failures < 8 {
            let room = target - mol.atom_count();
            let use_core = self.rng.gen_bool(0.25);
            let pool = if use_core { &self.cores } else { &self.substituents };
            let fitting: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].atom_count() <= room).collect();
            let Some(&pick) = fitting.choose(&mut self.rng) else {
                failures += 1;
                continue;
            };
            let block = pool[pick].clone();
            match attach(&mol, &block, &mut self.rng) {
                Some(joined) => mol = joined,
                None => failures += 1,
            }
        }
        mol
    }

    /// SMILES of a generated molecule written in a random atom order, so
    /// consumers see non-canonical text.
    pub fn smiles(&mut self, max_atoms: usize) -> String {
        let mol = self.molecule(max_atoms);
        let ranks = random_permutation(&mut self.rng, mol.atom_count());
        mol.to_smiles_with_ranks(&ranks)
    }

    pub fn corpus(&mut self, count: usize, max_atoms: usize) -> Vec<String> {
        (0..count).map(|_| self.smiles(max_atoms)).collect()
    }
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

fn hydrogen_sites(g: &MolGraph) -> Vec<usize> {
    g.atoms()
        .iter()
        .filter(|a| a.explicit_h > 0 && a.formal_charge == 0 && !a.element.is_wildcard())
        .map(|a| a.index)
        .collect()
}

/// Joins `block` onto `mol` with a single bond between two hydrogen-bearing
/// atoms, removing one hydrogen from each.
fn attach<R: Rng>(mol: &MolGraph, block: &MolGraph, rng: &mut R) -> Option<MolGraph> {
    let &site = hydrogen_sites(mol).choose(rng)?;
    let &other = hydrogen_sites(block).choose(rng)?;
    let offset = mol.atom_count();
    let mut atoms: Vec<Atom> = mol.atoms().to_vec();
    atoms.extend(block.atoms().iter().cloned());
    atoms[site].explicit_h -= 1;
    atoms[offset + other].explicit_h -= 1;
    let mut bonds: Vec<Bond> = mol.bonds().to_vec();
    bonds.extend(block.bonds().iter().map(|b| Bond::new(b.a + offset, b.b + offset, b.order)));
    bonds.push(Bond::new(site, offset + other, BondOrder::Single));
    MolGraph::new(atoms, bonds).ok()
}

/// Small random connected molecules over C, N and O with single, double and
/// triple bonds and occasional rings. Hydrogens fill each atom to its
/// lowest valence. Used to drive exhaustive oracles.
pub fn small_molecule<R: Rng>(rng: &mut R, max_atoms: usize) -> MolGraph {
    const ELEMENTS: [Element; 5] = [Element::C, Element::C, Element::C, Element::N, Element::O];
    let n = rng.gen_range(1..=max_atoms.max(1));
    let elements: Vec<Element> = (0..n).map(|_| *ELEMENTS.choose(rng).unwrap()).collect();
    let capacity = |e: Element| e.organic_valences().unwrap()[0] as u32;
    let mut used = vec![0u32; n];
    let mut bonds: Vec<Bond> = Vec::new();
    for i in 1..n {
        let open: Vec<usize> = (0..i).filter(|&j| used[j] < capacity(elements[j])).collect();
        let Some(&j) = open.choose(rng) else {
            // nothing left to attach to; keep what we have
            return build_small(&elements[..i], &bonds);
        };
        let room = (capacity(elements[j]) - used[j]).min(capacity(elements[i]));
        let order = match rng.gen_range(0..20) {
            0 if room >= 3 => BondOrder::Triple,
            1..=3 if room >= 2 => BondOrder::Double,
            _ => BondOrder::Single,
        };
        used[i] += order.valence();
        used[j] += order.valence();
        bonds.push(Bond::new(j, i, order));
    }
    for _ in 0..2 {
        if n >= 3 && rng.gen_bool(0.35) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let bonded = bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a));
            if a != b && !bonded && used[a] < capacity(elements[a]) && used[b] < capacity(elements[b]) {
                used[a] += 1;
                used[b] += 1;
                bonds.push(Bond::new(a, b, BondOrder::Single));
            }
        }
    }
    build_small(&elements, &bonds)
}

fn build_small(elements: &[Element], bonds: &[Bond]) -> MolGraph {
    let mut sums = vec![0u32; elements.len()];
    for b in bonds {
        sums[b.a] += b.order.valence();
        sums[b.b] += b.order.valence();
    }
    let atoms = elements
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut atom = Atom::new(e, i);
            atom.explicit_h = (e.organic_valences().unwrap()[0] as u32 - sums[i]) as u8;
            atom
        })
        .collect();
    MolGraph::new(atoms, bonds.to_vec()).expect("generated graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::canonicalize;

    #[test]
    fn generator_is_deterministic() {
        let a = MoleculeGenerator::new(7).corpus(20, 30);
        let b = MoleculeGenerator::new(7).corpus(20, 30);
        assert_eq!(a, b);
    }

    #[test]
    fn generated_molecules_reparse_and_fit() {
        let mut gen = MoleculeGenerator::new(11);
        for _ in 0..200 {
            let mol = gen.molecule(40);
            assert!(mol.atom_count() <= 40);
            assert!(mol.is_connected());
            let text = mol.to_smiles_with_ranks(&(0..mol.atom_count()).collect::<Vec<_>>());
            let back = parse_smiles(&text).unwrap();
            assert_eq!(canonicalize(&back).unwrap().1, canonicalize(&mol).unwrap().1);
        }
    }

    #[test]
    fn small_molecules_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let mol = small_molecule(&mut rng, 6);
            assert!(mol.atom_count() <= 6);
            assert!(mol.is_connected());
            let (_, smi) = canonicalize(&mol).unwrap();
            assert_eq!(canonicalize(&parse_smiles(&smi).unwrap()).unwrap().1, smi);
        }
    }
}
