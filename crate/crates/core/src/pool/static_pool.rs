use num_bigint::BigUint;
use num_rational::BigRational;
use rand::Rng;

use super::snapshot::{self, SnapshotHeader, SnapshotKind};
use super::{check_budget, parallel_encrypt};
use crate::config::CacheConfig;
use crate::error::{Error, Result};
use crate::he::{Ciphertext, PublicKey};
use crate::radix::pow;

const ZERO_STREAM_SALT: u64 = 0x5a;

/// `n + 1` levels; level `i` holds `2r` independent encryptions of `r^i`.
/// Also keeps one encryption of zero to seed accumulators. Immutable after
/// construction and freely shared between readers.
#[derive(Clone, Debug)]
pub struct StaticRadixPool {
    pk: PublicKey,
    r: u32,
    n: usize,
    levels: Vec<Vec<Ciphertext>>,
    zero: Ciphertext,
}

pub fn init_static_pool(pk: &PublicKey, cfg: &CacheConfig) -> Result<StaticRadixPool> {
    cfg.validate()?;
    let (r, n) = (cfg.r, cfg.n);
    check_budget(pk, &pow(r, n), &format!("a radix pool with r = {r}, n = {n}"))?;
    let width = 2 * r as usize;
    let mut values = Vec::with_capacity((n + 1) * width + 1);
    for i in 0..=n {
        let v = BigRational::from_integer(pow(r, i).into());
        values.extend(std::iter::repeat_n(v, width));
    }
    values.push(BigRational::from_integer(0.into()));
    let mode = cfg.rng_mode().derive(ZERO_STREAM_SALT);
    let mut cts = parallel_encrypt(pk, &values, cfg.workers, mode)?;
    let zero = cts.pop().expect("zero entry appended last");
    let mut levels = Vec::with_capacity(n + 1);
    let mut rest = cts.into_iter();
    for _ in 0..=n {
        levels.push(rest.by_ref().take(width).collect());
    }
    Ok(StaticRadixPool { pk: pk.clone(), r, n, levels, zero })
}

impl StaticRadixPool {
    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn radix(&self) -> u32 {
        self.r
    }

    /// Highest level index.
    pub fn max_level(&self) -> usize {
        self.n
    }

    /// Entries per level (`2r`).
    pub fn width(&self) -> usize {
        2 * self.r as usize
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self, i: usize) -> Result<&[Ciphertext]> {
        self.levels.get(i).map(Vec::as_slice).ok_or(Error::LevelOutOfRange { level: i, max: self.n })
    }

    /// The precomputed encryption of zero.
    pub fn zero(&self) -> &Ciphertext {
        &self.zero
    }

    /// A uniformly random entry of level `i`, with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> Result<&Ciphertext> {
        self.sample_with_index(level, rng).map(|(_, c)| c)
    }

    pub fn sample_with_index<R: Rng + ?Sized>(&self, level: usize, rng: &mut R) -> Result<(usize, &Ciphertext)> {
        let group = self.level(level)?;
        let idx = rng.random_range(0..group.len());
        Ok((idx, &group[idx]))
    }

    /// Value `r^i` stored at level `i`.
    pub fn level_value(&self, i: usize) -> BigUint {
        pow(self.r, i)
    }

    /// Serialize as a versioned snapshot tied to this key and radix layout.
    pub fn to_snapshot(&self) -> Vec<u8> {
        let header = self.header();
        let cts = self.levels.iter().flatten().chain(std::iter::once(&self.zero));
        snapshot::write(&header, cts)
    }

    /// Load a snapshot, refusing one taken under a different key or layout.
    pub fn from_snapshot(pk: &PublicKey, cfg: &CacheConfig, bytes: &[u8]) -> Result<Self> {
        cfg.validate()?;
        let expected = SnapshotHeader::new(SnapshotKind::Static, pk, cfg.r, cfg.n as u64);
        let mut cts = snapshot::read(&expected, bytes)?;
        let width = 2 * cfg.r as usize;
        if cts.len() != (cfg.n + 1) * width + 1 {
            return Err(Error::Serialization(format!("snapshot holds {} ciphertexts", cts.len())));
        }
        if cts.iter().any(|c| c.backend() != pk.kind()) {
            return Err(Error::Serialization("snapshot ciphertext from another backend".into()));
        }
        let zero = cts.pop().unwrap();
        let levels = cts.chunks(width).map(<[Ciphertext]>::to_vec).collect();
        Ok(StaticRadixPool { pk: pk.clone(), r: cfg.r, n: cfg.n, levels, zero })
    }

    fn header(&self) -> SnapshotHeader {
        SnapshotHeader::new(SnapshotKind::Static, &self.pk, self.r, self.n as u64)
    }
}
