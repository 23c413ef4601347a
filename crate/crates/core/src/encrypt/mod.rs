//! Encryption strategies built on the ciphertext caches.

mod asenc;
mod fsenc;
mod rache;

pub use asenc::as_enc;
pub use fsenc::{fs_enc, FsEncParams};
pub use rache::{czero, czero_with_coins, rache_fast_enc};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::he::{Ciphertext, PublicKey};

/// Shared, thread-safe homomorphic-operation counters. Clones share cells.
#[derive(Clone, Debug, Default)]
pub struct OpCounters(Arc<Cells>);

#[derive(Debug, Default)]
struct Cells {
    adds: AtomicU64,
    const_muls: AtomicU64,
    encs: AtomicU64,
    stalls: AtomicU64,
}

/// A point-in-time copy of [`OpCounters`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Homomorphic additions and subtractions.
    pub adds: u64,
    /// Plaintext-constant multiplications, negations included.
    pub const_muls: u64,
    /// Base encryptions performed on the online path.
    pub encs: u64,
    /// Pool stalls observed.
    pub stalls: u64,
}

impl OpCounts {
    pub fn homomorphic_ops(&self) -> u64 {
        self.adds + self.const_muls
    }

    /// Counts accumulated since `earlier`.
    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            adds: self.adds - earlier.adds,
            const_muls: self.const_muls - earlier.const_muls,
            encs: self.encs - earlier.encs,
            stalls: self.stalls - earlier.stalls,
        }
    }
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts {
            adds: self.0.adds.load(Ordering::Relaxed),
            const_muls: self.0.const_muls.load(Ordering::Relaxed),
            encs: self.0.encs.load(Ordering::Relaxed),
            stalls: self.0.stalls.load(Ordering::Relaxed),
        }
    }

    /// Zero all counters. Call only between runs.
    pub fn reset(&self) {
        for cell in [&self.0.adds, &self.0.const_muls, &self.0.encs, &self.0.stalls] {
            cell.store(0, Ordering::Relaxed);
        }
    }

    pub fn add_const_muls(&self, n: u64) {
        self.0.const_muls.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_encs(&self, n: u64) {
        self.0.encs.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_stalls(&self, n: u64) {
        self.0.stalls.fetch_add(n, Ordering::Relaxed);
    }
}

/// Homomorphic evaluation that counts every operation.
pub(crate) struct Counted<'a> {
    pub pk: &'a PublicKey,
    pub ops: &'a OpCounters,
}

impl Counted<'_> {
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        self.ops.0.adds.fetch_add(1, Ordering::Relaxed);
        self.pk.eval_add(a, b)
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        self.ops.0.adds.fetch_add(1, Ordering::Relaxed);
        self.pk.eval_sub(a, b)
    }

    pub fn mul(&self, c: &BigRational, x: &Ciphertext) -> Result<Ciphertext> {
        self.ops.0.const_muls.fetch_add(1, Ordering::Relaxed);
        self.pk.eval_mul_plain(c, x)
    }

    pub fn negate(&self, x: &Ciphertext) -> Result<Ciphertext> {
        self.ops.0.const_muls.fetch_add(1, Ordering::Relaxed);
        self.pk.negate(x)
    }
}
