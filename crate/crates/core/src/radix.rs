//! Exact radix decomposition of integers and decimal fractions.
//!
//! Decimal values are carried as scaled integers (`frac_scaled / 10^n_d`)
//! so that no binary floating-point rounding ever touches a digit.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest supported count of fractional decimal digits (fits a `u64`).
pub const MAX_DECIMAL_DIGITS: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Positive,
    Negative,
}

/// `sign * (int_part + frac_scaled / 10^n_d)`, exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DecimalValue {
    sign: Sign,
    int_part: BigUint,
    frac_scaled: u64,
    n_d: usize,
}

impl DecimalValue {
    pub fn new(sign: Sign, int_part: BigUint, frac_scaled: u64, n_d: usize) -> Result<Self> {
        if n_d > MAX_DECIMAL_DIGITS {
            return Err(Error::Precision { digits: n_d, max: MAX_DECIMAL_DIGITS });
        }
        if frac_scaled >= 10u64.pow(n_d as u32) {
            return Err(Error::Malformed(format!("fraction {frac_scaled} does not fit {n_d} digits")));
        }
        let sign = if int_part.is_zero() && frac_scaled == 0 { Sign::Positive } else { sign };
        Ok(DecimalValue { sign, int_part, frac_scaled, n_d })
    }

    pub fn from_integer(value: i64, n_d: usize) -> Result<Self> {
        let sign = if value < 0 { Sign::Negative } else { Sign::Positive };
        Self::new(sign, BigUint::from(value.unsigned_abs()), 0, n_d)
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn is_negative(&self) -> bool {
        self.sign == Sign::Negative
    }

    pub fn int_part(&self) -> &BigUint {
        &self.int_part
    }

    /// Fractional part times `10^n_d`.
    pub fn frac_scaled(&self) -> u64 {
        self.frac_scaled
    }

    pub fn precision(&self) -> usize {
        self.n_d
    }

    pub fn is_integer(&self) -> bool {
        self.frac_scaled == 0
    }

    /// Re-express at a higher precision; lowering it is refused unless the
    /// dropped digits are zero.
    pub fn with_precision(&self, n_d: usize) -> Result<Self> {
        if n_d >= self.n_d {
            let frac = self.frac_scaled * 10u64.pow((n_d - self.n_d) as u32);
            return Self::new(self.sign, self.int_part.clone(), frac, n_d);
        }
        let div = 10u64.pow((self.n_d - n_d) as u32);
        if !self.frac_scaled.is_multiple_of(div) {
            return Err(Error::Precision { digits: self.n_d, max: n_d });
        }
        Self::new(self.sign, self.int_part.clone(), self.frac_scaled / div, n_d)
    }

    pub fn to_rational(&self) -> BigRational {
        let denom = BigInt::from(10u64.pow(self.n_d as u32));
        let numer = BigInt::from(self.int_part.clone()) * &denom + BigInt::from(self.frac_scaled);
        let numer = if self.is_negative() { -numer } else { numer };
        BigRational::new(numer, denom)
    }

    pub fn to_f64(&self) -> f64 {
        let v = self.int_part.to_f64().unwrap_or(f64::INFINITY) + self.frac_scaled as f64 / 10f64.powi(self.n_d as i32);
        if self.is_negative() {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for DecimalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negative() {
            f.write_str("-")?;
        }
        write!(f, "{}", self.int_part)?;
        if self.n_d > 0 {
            write!(f, ".{:0width$}", self.frac_scaled, width = self.n_d)?;
        }
        Ok(())
    }
}

/// Parse `[+-]digits[.digits]` into an exact decimal with `n_d` fractional
/// digits. Fractional digits past `n_d` are only accepted when they are zero.
pub fn parse_decimal(text: &str, n_d: usize) -> Result<DecimalValue> {
    if n_d > MAX_DECIMAL_DIGITS {
        return Err(Error::Precision { digits: n_d, max: MAX_DECIMAL_DIGITS });
    }
    let malformed = || Error::Malformed(text.to_string());
    let s = text.trim();
    let (sign, body) = match s.as_bytes().first() {
        Some(b'-') => (Sign::Negative, &s[1..]),
        Some(b'+') => (Sign::Positive, &s[1..]),
        _ => (Sign::Positive, s),
    };
    let (int_str, frac_str) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_str.is_empty() && frac_str.is_empty() {
        return Err(malformed());
    }
    if !int_str.bytes().all(|b| b.is_ascii_digit()) || !frac_str.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let frac_str = if frac_str.len() > n_d {
        let (kept, dropped) = frac_str.split_at(n_d);
        if dropped.bytes().any(|b| b != b'0') {
            return Err(Error::Precision { digits: frac_str.trim_end_matches('0').len(), max: n_d });
        }
        kept
    } else {
        frac_str
    };
    let int_part =
        if int_str.is_empty() { BigUint::zero() } else { BigUint::from_str(int_str).map_err(|_| malformed())? };
    let mut frac_scaled: u64 = if frac_str.is_empty() { 0 } else { frac_str.parse().map_err(|_| malformed())? };
    frac_scaled *= 10u64.pow((n_d - frac_str.len()) as u32);
    DecimalValue::new(sign, int_part, frac_scaled, n_d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DigitKind {
    /// `digits[i]` weighs `radix^i`.
    Integer,
    /// `digits[i]` weighs `radix^-(i+1)`.
    Fraction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitVector {
    radix: u32,
    kind: DigitKind,
    digits: Vec<u32>,
}

impl DigitVector {
    pub fn radix(&self) -> u32 {
        self.radix
    }

    pub fn kind(&self) -> DigitKind {
        self.kind
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Integer recomposition; only meaningful for [`DigitKind::Integer`].
    pub fn recompose_int(&self) -> BigUint {
        debug_assert_eq!(self.kind, DigitKind::Integer);
        self.digits.iter().rev().fold(BigUint::zero(), |acc, &d| acc * self.radix + d)
    }

    /// Fraction recomposition; only meaningful for [`DigitKind::Fraction`].
    pub fn recompose_frac(&self) -> BigRational {
        debug_assert_eq!(self.kind, DigitKind::Fraction);
        let mut numer = BigInt::zero();
        let mut denom = BigInt::one();
        for &d in &self.digits {
            numer = numer * self.radix + d;
            denom *= self.radix;
        }
        BigRational::new(numer, denom)
    }
}

pub fn pow(r: u32, e: usize) -> BigUint {
    num_traits::pow(BigUint::from(r), e)
}

/// Little-endian base-`r` digits of `m`, exactly `n + 1` of them.
pub fn int_digits(m: &BigUint, r: u32, n: usize) -> Result<DigitVector> {
    if r < 2 {
        return Err(Error::InvalidParams(format!("radix {r} must be at least 2")));
    }
    let len = n + 1;
    let mut digits = Vec::with_capacity(len);
    if let Some(mut v) = m.to_u64() {
        let r64 = u64::from(r);
        while v > 0 && digits.len() < len {
            digits.push((v % r64) as u32);
            v /= r64;
        }
        if v > 0 {
            return Err(capacity(m, r, n));
        }
    } else if r <= 256 {
        digits.extend(m.to_radix_le(r).into_iter().map(u32::from));
        if digits.len() > len {
            return Err(capacity(m, r, n));
        }
    } else {
        let mut v = m.clone();
        while !v.is_zero() && digits.len() < len {
            digits.push((&v % r).to_u32().expect("remainder below radix"));
            v /= r;
        }
        if !v.is_zero() {
            return Err(capacity(m, r, n));
        }
    }
    digits.resize(len, 0);
    Ok(DigitVector { radix: r, kind: DigitKind::Integer, digits })
}

fn capacity(m: &BigUint, r: u32, n: usize) -> Error {
    Error::Capacity(format!("{m} does not fit {} base-{r} digits", n + 1))
}

/// Fractional digits of `v` in base `base_inv` (the reciprocal of the
/// fractional radix). `digits[0]` is the first digit after the point.
///
/// Base 10 yields exactly `n_d` digits. Other bases are accepted when some
/// power of them is a multiple of `10^n_d`, which makes the expansion finite
/// and exact.
pub fn frac_digits(v: &DecimalValue, base_inv: u32) -> Result<DigitVector> {
    if base_inv < 2 {
        return Err(Error::IncompatibleBase(base_inv));
    }
    let n_d = v.precision();
    let ten_pow = BigUint::from(10u64.pow(n_d as u32));
    let base = BigUint::from(base_inv);
    let (len, base_pow) = if base_inv == 10 {
        (n_d, ten_pow.clone())
    } else {
        // 10^n_d divides base^k only if base carries both factors 2 and 5.
        if n_d > 0 && !base_inv.is_multiple_of(10) {
            return Err(Error::IncompatibleBase(base_inv));
        }
        let mut k = 0;
        let mut p = BigUint::one();
        while (&p % &ten_pow) != BigUint::zero() {
            p *= &base;
            k += 1;
        }
        (k, p)
    };
    let scaled = BigUint::from(v.frac_scaled()) * &base_pow / &ten_pow;
    let mut digits = vec![0u32; len];
    let mut rest = scaled;
    for slot in digits.iter_mut().rev() {
        *slot = (&rest % base_inv).to_u32().expect("remainder below base");
        rest /= base_inv;
    }
    debug_assert!(rest.is_zero());
    Ok(DigitVector { radix: base_inv, kind: DigitKind::Fraction, digits })
}
