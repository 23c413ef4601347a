use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

use super::{Counted, OpCounters};
use crate::config::CacheConfig;
use crate::error::{Error, Result};
use crate::he::Ciphertext;
use crate::pool::StreamCoeffPool;
use crate::radix::{frac_digits, int_digits, pow, DecimalValue};

/// Digit layout for [`fs_enc`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FsEncParams {
    pub r_i: u32,
    pub n_i: usize,
    pub r_d_inv: u32,
    pub n_d: usize,
}

impl From<&CacheConfig> for FsEncParams {
    fn from(c: &CacheConfig) -> Self {
        FsEncParams { r_i: c.r_i, n_i: c.n_i, r_d_inv: c.r_d_inv, n_d: c.n_d }
    }
}

/// Cached encryption of a signed decimal.
///
/// The accumulator starts as a pooled `Enc(0)` lifted to the working scale.
/// Each digit `d` of weight `w` (`r_i^j` for integer digit `j`, `r_d^(j+1)`
/// for fractional digit `j`) draws a salt `s`, pops `Enc(s)` and
/// `Enc(d - s)` from the pool and adds `w ⊙ (Enc(s) ⊕ Enc(d - s))`. A
/// negative input negates the result. Requires a backend with real-valued
/// constant multiplication. Accepts `|int_part| < r_i^n_i`.
pub fn fs_enc<R: Rng + ?Sized>(
    int_pool: &StreamCoeffPool,
    dec_pool: &StreamCoeffPool,
    v: &DecimalValue,
    params: &FsEncParams,
    rng: &mut R,
    ops: &OpCounters,
) -> Result<Ciphertext> {
    let pk = int_pool.public_key();
    if !pk.kind().supports_real_constants() {
        return Err(Error::Capability(format!("fs_enc needs real-valued constants, which {} lacks", pk.kind())));
    }
    if dec_pool.public_key().key_id() != pk.key_id() {
        return Err(Error::InvalidParams("integer and decimal pools use different keys".into()));
    }
    if params.n_i < 1 {
        return Err(Error::InvalidParams("n_i must be at least 1".into()));
    }
    if int_pool.coefficient_max() + 1 < params.r_i || dec_pool.coefficient_max() + 1 < params.r_d_inv {
        return Err(Error::InvalidParams(format!(
            "pools cover 0..={} and 0..={}, radices {} and {} need at least {} and {}",
            int_pool.coefficient_max(),
            dec_pool.coefficient_max(),
            params.r_i,
            params.r_d_inv,
            params.r_i - 1,
            params.r_d_inv - 1
        )));
    }
    let v = v.with_precision(params.n_d)?;
    let int = int_digits(v.int_part(), params.r_i, params.n_i - 1)?;
    let frac = frac_digits(&v, params.r_d_inv)?;

    let stalls_before = int_pool.stall_count() + dec_pool.stall_count();
    let ev = Counted { pk, ops };
    let mut acc = ev.mul(&BigRational::one(), &int_pool.take(0)?)?;

    for (j, &d) in int.digits().iter().enumerate() {
        let weight = BigRational::from_integer(BigInt::from(pow(params.r_i, j)));
        acc = salted_digit(&ev, int_pool, d, params.r_i, &weight, &acc, rng)?;
    }
    let mut weight = BigRational::one();
    let step = BigRational::new(BigInt::one(), BigInt::from(params.r_d_inv));
    for &d in frac.digits() {
        weight *= &step;
        acc = salted_digit(&ev, dec_pool, d, params.r_d_inv, &weight, &acc, rng)?;
    }
    if v.is_negative() {
        acc = ev.negate(&acc)?;
    }

    let stalls = int_pool.stall_count() + dec_pool.stall_count() - stalls_before;
    ops.add_encs(stalls);
    ops.add_stalls(stalls);
    Ok(acc)
}

fn salted_digit<R: Rng + ?Sized>(
    ev: &Counted<'_>,
    pool: &StreamCoeffPool,
    digit: u32,
    radix: u32,
    weight: &BigRational,
    acc: &Ciphertext,
    rng: &mut R,
) -> Result<Ciphertext> {
    let salt = rng.random_range(0..radix);
    let left = pool.take(salt)?;
    let rest = i64::from(digit) - i64::from(salt);
    let right = pool.take_signed(rest)?;
    if rest < 0 {
        ev.ops.add_const_muls(1);
    }
    let pair = ev.add(&left, &right)?;
    let term = ev.mul(weight, &pair)?;
    ev.add(&term, acc)
}
