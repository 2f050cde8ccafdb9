//! Binary token shards.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! header   "CAMSHRD1" | version u32 | vocab_hash [u8; 32] | sequence_count u64
//! record   length u32 | view u8 | reserved [u8; 3] | atom_count u32 | node_count u32
//!          | token ids [u32; length] | label mask [u8; ceil(length / 8)]
//! index    record offsets [u64; sequence_count] | index offset u64 | "CAMSEND1"
//! ```
//!
//! Label mask bits are LSB-first; 1 marks a prediction target and 0 a
//! position to ignore (the usual `-100` label). `view` is the scale index
//! for single-scale views and [`CONCAT_VIEW`] for the concatenated view.

use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"CAMSHRD1";
pub const TRAILER: &[u8; 8] = b"CAMSEND1";
pub const SHARD_VERSION: u32 = 1;
pub const CONCAT_VIEW: u8 = 255;
const HEADER_LEN: usize = 8 + 4 + 32 + 8;
const RECORD_HEADER_LEN: usize = 4 + 1 + 3 + 4 + 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShardError {
    #[error("bad magic at offset 0")]
    BadMagic,
    #[error("unsupported shard version {0}")]
    UnsupportedVersion(u32),
    #[error("shard truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("bad trailer at offset {offset}")]
    BadTrailer { offset: usize },
    #[error("record {index} has invalid offset {offset}")]
    BadOffset { index: usize, offset: usize },
    #[error("record at offset {offset}: label mask and token length disagree")]
    MaskMismatch { offset: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardRecord {
    pub view: u8,
    pub atom_count: u32,
    /// Motif-graph node count for single-scale views; 0 for the
    /// concatenated view.
    pub node_count: u32,
    pub token_ids: Vec<u32>,
    /// true = prediction target.
    pub label_mask: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenShard {
    pub version: u32,
    pub vocab_hash: [u8; 32],
    pub records: Vec<ShardRecord>,
}

impl TokenShard {
    pub fn new(vocab_hash: [u8; 32]) -> Self {
        TokenShard { version: SHARD_VERSION, vocab_hash, records: Vec::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let body: usize = self.records.iter().map(|r| RECORD_HEADER_LEN + r.token_ids.len() * 4 + r.token_ids.len().div_ceil(8)).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + body + self.records.len() * 8 + 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.vocab_hash);
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        let mut offsets = Vec::with_capacity(self.records.len());
        for r in &self.records {
            assert_eq!(r.token_ids.len(), r.label_mask.len(), "mask must align with tokens");
            offsets.push(out.len() as u64);
            out.extend_from_slice(&(r.token_ids.len() as u32).to_le_bytes());
            out.push(r.view);
            out.extend_from_slice(&[0u8; 3]);
            out.extend_from_slice(&r.atom_count.to_le_bytes());
            out.extend_from_slice(&r.node_count.to_le_bytes());
            for id in &r.token_ids {
                out.extend_from_slice(&id.to_le_bytes());
            }
            let mut mask = vec![0u8; r.label_mask.len().div_ceil(8)];
            for (i, &target) in r.label_mask.iter().enumerate() {
                if target {
                    mask[i / 8] |= 1 << (i % 8);
                }
            }
            out.extend_from_slice(&mask);
        }
        let index_offset = out.len() as u64;
        for off in offsets {
            out.extend_from_slice(&off.to_le_bytes());
        }
        out.extend_from_slice(&index_offset.to_le_bytes());
        out.extend_from_slice(TRAILER);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ShardError> {
        let reader = ShardReader::new(bytes)?;
        let records = (0..reader.len()).map(|i| reader.get(i)).collect::<Result<_, _>>()?;
        Ok(TokenShard { version: SHARD_VERSION, vocab_hash: reader.vocab_hash(), records })
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let bytes = std::fs::read(path)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

/// Random access over an in-memory shard image.
pub struct ShardReader<'a> {
    bytes: &'a [u8],
    offsets: Vec<usize>,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32, ShardError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or(ShardError::Truncated { offset: at })
}

fn read_u64(bytes: &[u8], at: usize) -> Result<u64, ShardError> {
    bytes
        .get(at..at + 8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or(ShardError::Truncated { offset: at })
}

impl<'a> ShardReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self, ShardError> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(ShardError::BadMagic);
        }
        let version = read_u32(bytes, 8)?;
        if version != SHARD_VERSION {
            return Err(ShardError::UnsupportedVersion(version));
        }
        let count = read_u64(bytes, 44)? as usize;
        if bytes.len() < HEADER_LEN + 16 {
            return Err(ShardError::Truncated { offset: bytes.len() });
        }
        let trailer_at = bytes.len() - 8;
        if &bytes[trailer_at..] != TRAILER {
            return Err(ShardError::BadTrailer { offset: trailer_at });
        }
        let index_at = read_u64(bytes, trailer_at - 8)? as usize;
        let index_end = count.checked_mul(8).and_then(|n| n.checked_add(index_at));
        if index_at < HEADER_LEN || index_end != Some(trailer_at - 8) {
            return Err(ShardError::BadOffset { index: count, offset: index_at });
        }
        let mut offsets = Vec::with_capacity(count);
        let mut expected = HEADER_LEN;
        for i in 0..count {
            let off = read_u64(bytes, index_at + i * 8)? as usize;
            if off != expected {
                return Err(ShardError::BadOffset { index: i, offset: off });
            }
            let len = read_u32(bytes, off)? as usize;
            expected = off + RECORD_HEADER_LEN + len * 4 + len.div_ceil(8);
            if expected > index_at {
                return Err(ShardError::Truncated { offset: off });
            }
            offsets.push(off);
        }
        if expected != index_at {
            return Err(ShardError::BadOffset { index: count, offset: index_at });
        }
        Ok(ShardReader { bytes, offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn vocab_hash(&self) -> [u8; 32] {
        self.bytes[12..44].try_into().unwrap()
    }

    pub fn get(&self, index: usize) -> Result<ShardRecord, ShardError> {
        let off = *self.offsets.get(index).ok_or(ShardError::BadOffset { index, offset: 0 })?;
        let b = self.bytes;
        let len = read_u32(b, off)? as usize;
        let view = b[off + 4];
        let atom_count = read_u32(b, off + 8)?;
        let node_count = read_u32(b, off + 12)?;
        let ids_at = off + RECORD_HEADER_LEN;
        let token_ids = (0..len).map(|i| read_u32(b, ids_at + i * 4)).collect::<Result<Vec<_>, _>>()?;
        let mask_at = ids_at + len * 4;
        let mask_bytes = b.get(mask_at..mask_at + len.div_ceil(8)).ok_or(ShardError::Truncated { offset: mask_at })?;
        // padding bits past the last token must be zero
        if !len.is_multiple_of(8) && mask_bytes[len / 8] >> (len % 8) != 0 {
            return Err(ShardError::MaskMismatch { offset: off });
        }
        let label_mask = (0..len).map(|i| mask_bytes[i / 8] & (1 << (i % 8)) != 0).collect();
        Ok(ShardRecord { view, atom_count, node_count, token_ids, label_mask })
    }
}

/// NTP label mask: specials are ignored, everything else is a target.
pub fn label_mask(token_ids: &[u32], is_special: impl Fn(u32) -> bool) -> Vec<bool> {
    token_ids.iter().map(|&t| !is_special(t)).collect()
}
