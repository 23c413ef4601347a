//! Precomputed ciphertext caches.
//!
//! [`StaticRadixPool`] holds reusable encryptions of radix powers for the
//! additive encryptors. [`StreamCoeffPool`] holds single-use encryptions of
//! small coefficients in per-value ring queues that a background producer
//! keeps topped up.

mod snapshot;
mod static_pool;
mod stream;

pub use snapshot::{SnapshotHeader, SnapshotKind, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use static_pool::{init_static_pool, StaticRadixPool};
pub use stream::{init_stream_pool, StreamCoeffPool, StreamPoolParams};

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::he::{Ciphertext, PublicKey};
use crate::rng::{HeRng, RngMode};

/// Encrypt `values` on up to `workers` threads. Item `i` goes to worker
/// `i % workers`; in seeded mode item `i` draws from stream `i`, so the
/// output does not depend on the worker count.
pub(crate) fn parallel_encrypt(
    pk: &PublicKey,
    values: &[BigRational],
    workers: usize,
    mode: RngMode,
) -> Result<Vec<Ciphertext>> {
    let workers = workers.clamp(1, values.len().max(1));
    let mut slots: Vec<Option<Ciphertext>> = vec![None; values.len()];
    let chunks: Vec<Result<Vec<(usize, Ciphertext)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut shared: Option<HeRng> = None;
                    let mut out = Vec::with_capacity(values.len() / workers + 1);
                    for i in (w..values.len()).step_by(workers) {
                        let ct = match mode {
                            RngMode::Seeded(_) => pk.enc(&values[i], &mut mode.stream(i as u64))?,
                            RngMode::Entropy => pk.enc(&values[i], shared.get_or_insert_with(|| mode.rng()))?,
                        };
                        out.push((i, ct));
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("pool init worker panicked")).collect()
    });
    for chunk in chunks {
        for (i, ct) in chunk? {
            slots[i] = Some(ct);
        }
    }
    Ok(slots.into_iter().map(|c| c.expect("every item assigned")).collect())
}

/// Refuse plaintexts larger than the backend can carry.
pub(crate) fn check_budget(pk: &PublicKey, largest: &BigUint, what: &str) -> Result<()> {
    if let Some(limit) = pk.message_limit() {
        if largest > &limit {
            return Err(Error::BudgetOverflow(format!(
                "{what} needs plaintexts up to {largest}, the backend carries at most {limit}"
            )));
        }
    }
    Ok(())
}
