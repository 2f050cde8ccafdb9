use super::SimilError;
use crate::molgraph::{FragmentCoder, MolGraph};

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_NBITS: usize = 2048;

/// Fixed-width bit vector of hashed circular environments.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FingerprintBits {
    words: Vec<u64>,
    nbits: usize,
    radius: u32,
}

impl FingerprintBits {
    pub fn empty(nbits: usize, radius: u32) -> Self {
        FingerprintBits { words: vec![0; nbits.div_ceil(64)], nbits, radius }
    }

    pub fn from_indices(nbits: usize, radius: u32, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Self::empty(nbits, radius);
        for i in indices {
            fp.set(i);
        }
        fp
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.nbits, "bit {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.nbits && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&i| self.get(i)).collect()
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hashes the rooted canonical code of every atom's radius-r ball, for
/// r = 0..=radius, into `nbits` buckets. Codes are canonical, so the
/// result does not depend on atom order.
pub fn circular_fingerprint(g: &MolGraph, radius: u32, nbits: usize) -> Result<FingerprintBits, SimilError> {
    if !nbits.is_power_of_two() {
        return Err(SimilError::NbitsNotPowerOfTwo(nbits));
    }
    let mut fp = FingerprintBits::empty(nbits, radius);
    let mut coder = FragmentCoder::new(g);
    let mut in_ball = vec![false; g.atom_count()];
    for center in 0..g.atom_count() {
        let mut ball = vec![center];
        let mut frontier = vec![center];
        in_ball[center] = true;
        for r in 0..=radius {
            if r > 0 {
                let mut next = Vec::new();
                for &a in &frontier {
                    for (nb, _) in g.neighbors(a) {
                        if !in_ball[nb] {
                            in_ball[nb] = true;
                            next.push(nb);
                        }
                    }
                }
                if next.is_empty() {
                    // larger radii would repeat the same code
                    break;
                }
                ball.extend_from_slice(&next);
                frontier = next;
            }
            let code = coder.rooted_code(&ball, center).expect("radius balls are connected");
            fp.set((fnv1a64(code.as_bytes()) & (nbits as u64 - 1)) as usize);
        }
        for &a in &ball {
            in_ball[a] = false;
        }
    }
    Ok(fp)
}

/// |a ∧ b| / |a ∨ b|, with 1.0 for two empty vectors.
pub fn tanimoto(a: &FingerprintBits, b: &FingerprintBits) -> Result<f64, SimilError> {
    if a.nbits != b.nbits {
        return Err(SimilError::WidthMismatch { a: a.nbits, b: b.nbits });
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { f64::from(inter) / f64::from(union) })
}
