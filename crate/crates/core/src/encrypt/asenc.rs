use num_bigint::BigUint;
use rand::Rng;

use super::{Counted, OpCounters};
use crate::error::{Error, Result};
use crate::he::Ciphertext;
use crate::pool::StaticRadixPool;
use crate::radix::{int_digits, pow};

/// Additive cached encryption of `0 <= m < r^n`.
///
/// Walks levels `i = 1..=n` over the base-`r` digits of `m`, least
/// significant first. A zero digit adds and subtracts two independent
/// samples of level `i`, which changes the payload but not the value. A
/// nonzero digit `d` adds one sampled `Enc(r^(i-1))` `d` times. No base
/// encryption happens online.
pub fn as_enc<R: Rng + ?Sized>(
    pool: &StaticRadixPool,
    m: &BigUint,
    rng: &mut R,
    ops: &OpCounters,
) -> Result<Ciphertext> {
    let (r, n) = (pool.radix(), pool.max_level());
    let digits = int_digits(m, r, n)?;
    if digits.digits()[n] != 0 {
        return Err(Error::Capacity(format!("{m} is not below {r}^{n} = {}", pow(r, n))));
    }
    let ev = Counted { pk: pool.public_key(), ops };
    let mut ct = pool.zero().clone();
    for i in 1..=n {
        let d = digits.digits()[i - 1];
        if d == 0 {
            let plus = pool.sample(i, rng)?;
            let minus = pool.sample(i, rng)?;
            ct = ev.sub(&ev.add(&ct, plus)?, minus)?;
        } else {
            let entry = pool.sample(i - 1, rng)?;
            for _ in 0..d {
                ct = ev.add(&ct, entry)?;
            }
        }
    }
    Ok(ct)
}
