use num_bigint::BigUint;
use rand::Rng;

use super::{Counted, OpCounters};
use crate::error::{Error, Result};
use crate::he::Ciphertext;
use crate::pool::StaticRadixPool;
use crate::radix::int_digits;

/// A fresh-looking encryption of zero: starting from the pool's zero, for
/// each level `i` in `2..=n` flip a fair coin and on heads add one `Enc(r^i)`
/// and subtract one `Enc(r^(i-1))` `r` times.
pub fn czero<R: Rng + ?Sized>(pool: &StaticRadixPool, rng: &mut R, ops: &OpCounters) -> Result<Ciphertext> {
    let coins: Vec<bool> = (2..=pool.max_level()).map(|_| rng.random_bool(0.5)).collect();
    czero_with_coins(pool, &coins, rng, ops)
}

/// [`czero`] with explicit coin flips, `coins[j]` deciding level `j + 2`.
pub fn czero_with_coins<R: Rng + ?Sized>(
    pool: &StaticRadixPool,
    coins: &[bool],
    rng: &mut R,
    ops: &OpCounters,
) -> Result<Ciphertext> {
    let levels = pool.max_level().saturating_sub(1);
    if coins.len() != levels {
        return Err(Error::InvalidParams(format!("expected {levels} coin flips, got {}", coins.len())));
    }
    let ev = Counted { pk: pool.public_key(), ops };
    let mut ct = pool.zero().clone();
    for (i, _) in (2..).zip(coins).filter(|(_, &heads)| heads) {
        ct = ev.add(&ct, pool.sample(i, rng)?)?;
        let lower = pool.sample(i - 1, rng)?;
        for _ in 0..pool.radix() {
            ct = ev.sub(&ct, lower)?;
        }
    }
    Ok(ct)
}

/// The radix-cache baseline: `CZero` plus `c_i` repeated additions of a
/// sampled `Enc(r^i)` for every base-`r` digit `c_i` of `m`. Accepts
/// `m < r^(n+1)`.
pub fn rache_fast_enc<R: Rng + ?Sized>(
    pool: &StaticRadixPool,
    m: &BigUint,
    rng: &mut R,
    ops: &OpCounters,
) -> Result<Ciphertext> {
    let digits = int_digits(m, pool.radix(), pool.max_level())?;
    let ev = Counted { pk: pool.public_key(), ops };
    let mut ct = czero(pool, rng, ops)?;
    for (i, &c) in digits.digits().iter().enumerate().filter(|(_, &c)| c > 0) {
        let entry = pool.sample(i, rng)?;
        for _ in 0..c {
            ct = ev.add(&ct, entry)?;
        }
    }
    Ok(ct)
}
