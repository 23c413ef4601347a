//! Pool snapshot format:
//!
//! ```text
//! magic "STRP" | version u8 | kind u8 | backend tag u8 | key id [32]
//! | a u32 | b u64 | count u64 | (len u32 | ciphertext bytes) * count
//! ```
//!
//! `(a, b)` echo the pool layout: `(r, n)` for a static pool and
//! `(C, L)` for a streaming pool. All integers are big-endian.

use crate::error::{Error, Result};
use crate::he::{Ciphertext, PublicKey};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"STRP";
pub const SNAPSHOT_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 32 + 4 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    Static,
    Stream,
}

impl SnapshotKind {
    fn tag(self) -> u8 {
        match self {
            SnapshotKind::Static => b'R',
            SnapshotKind::Stream => b'Q',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub kind: SnapshotKind,
    pub backend_tag: u8,
    pub key_id: [u8; 32],
    pub a: u32,
    pub b: u64,
}

impl SnapshotHeader {
    pub fn new(kind: SnapshotKind, pk: &PublicKey, a: u32, b: u64) -> Self {
        SnapshotHeader { kind, backend_tag: pk.kind().tag(), key_id: pk.key_id(), a, b }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&SNAPSHOT_MAGIC);
        out.push(SNAPSHOT_VERSION);
        out.push(self.kind.tag());
        out.push(self.backend_tag);
        out.extend_from_slice(&self.key_id);
        out.extend_from_slice(&self.a.to_be_bytes());
        out.extend_from_slice(&self.b.to_be_bytes());
    }
}

pub(crate) fn write<'a>(header: &SnapshotHeader, cts: impl Iterator<Item = &'a Ciphertext>) -> Vec<u8> {
    let blobs: Vec<Vec<u8>> = cts.map(Ciphertext::to_bytes).collect();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 + blobs.iter().map(|b| b.len() + 4).sum::<usize>());
    header.encode(&mut out);
    out.extend_from_slice(&(blobs.len() as u64).to_be_bytes());
    for b in &blobs {
        out.extend_from_slice(&(b.len() as u32).to_be_bytes());
        out.extend_from_slice(b);
    }
    out
}

pub(crate) fn read(expected: &SnapshotHeader, bytes: &[u8]) -> Result<Vec<Ciphertext>> {
    if bytes.len() < HEADER_LEN + 8 || bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Serialization("not a pool snapshot".into()));
    }
    if bytes[4] != SNAPSHOT_VERSION {
        return Err(Error::Serialization(format!("unsupported snapshot version {}", bytes[4])));
    }
    let mut head = Vec::with_capacity(HEADER_LEN);
    expected.encode(&mut head);
    if bytes[5] != head[5] {
        return Err(Error::Serialization("snapshot holds a different pool type".into()));
    }
    if bytes[6] != head[6] || bytes[7..39] != head[7..39] {
        return Err(Error::Serialization("snapshot was taken under a different key".into()));
    }
    if bytes[39..HEADER_LEN] != head[39..HEADER_LEN] {
        return Err(Error::Serialization("snapshot pool layout differs from the configuration".into()));
    }
    let count = u64::from_be_bytes(bytes[HEADER_LEN..HEADER_LEN + 8].try_into().unwrap());
    let mut pos = HEADER_LEN + 8;
    let mut cts = Vec::new();
    for _ in 0..count {
        let len_bytes = bytes.get(pos..pos + 4).ok_or_else(truncated)?;
        let len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
        let body = bytes.get(pos + 4..pos + 4 + len).ok_or_else(truncated)?;
        cts.push(Ciphertext::from_bytes(body)?);
        pos += 4 + len;
    }
    if pos != bytes.len() {
        return Err(Error::Serialization("trailing bytes after snapshot".into()));
    }
    Ok(cts)
}

fn truncated() -> Error {
    Error::Serialization("truncated snapshot".into())
}
