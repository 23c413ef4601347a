//! Plaintext stand-in backend for fast functional tests.
//!
//! A "ciphertext" is the exact rational value plus a random tag, so two
//! encryptions of the same value still differ. There is no security.

use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MockKey;

impl MockKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigRational, rng: &mut R) -> MockCiphertext {
        MockCiphertext { numer: m.numer().clone(), denom: m.denom().clone(), tag: rng.random() }
    }
}

/// The value is kept as an unreduced fraction (`denom > 0`) so that
/// homomorphic operations skip gcd reduction; it is reduced on read.
#[derive(Clone, Debug)]
pub struct MockCiphertext {
    numer: BigInt,
    denom: BigInt,
    tag: u128,
}

impl PartialEq for MockCiphertext {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && &self.numer * &other.denom == &other.numer * &self.denom
    }
}

impl Eq for MockCiphertext {}

impl Hash for MockCiphertext {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value().hash(state);
        self.tag.hash(state);
    }
}

impl MockCiphertext {
    pub fn value(&self) -> BigRational {
        BigRational::new(self.numer.clone(), self.denom.clone())
    }

    pub fn combine(&self, y: &MockCiphertext, subtract: bool) -> MockCiphertext {
        let (a, b, denom) = if self.denom == y.denom {
            (self.numer.clone(), y.numer.clone(), self.denom.clone())
        } else {
            (&self.numer * &y.denom, &y.numer * &self.denom, &self.denom * &y.denom)
        };
        let numer = if subtract { a - b } else { a + b };
        let tag = self.tag.rotate_left(17) ^ y.tag.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ subtract as u128;
        MockCiphertext { numer, denom, tag }
    }

    pub fn scaled(&self, c: &BigRational) -> MockCiphertext {
        MockCiphertext { numer: &self.numer * c.numer(), denom: &self.denom * c.denom(), tag: self.tag.rotate_left(1) }
    }

    pub fn negated(&self) -> MockCiphertext {
        MockCiphertext { numer: -&self.numer, denom: self.denom.clone(), tag: self.tag.rotate_left(1) }
    }

    /// `tag (16 bytes) | numerator len (u32) | numerator | denominator`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let value = self.value();
        let numer = value.numer().to_signed_bytes_be();
        let denom = value.denom().to_signed_bytes_be();
        let mut out = Vec::with_capacity(20 + numer.len() + denom.len());
        out.extend_from_slice(&self.tag.to_be_bytes());
        out.extend_from_slice(&(numer.len() as u32).to_be_bytes());
        out.extend_from_slice(&numer);
        out.extend_from_slice(&denom);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::Serialization("truncated mock ciphertext".into());
        let tag = u128::from_be_bytes(bytes.get(..16).ok_or_else(bad)?.try_into().unwrap());
        let len = u32::from_be_bytes(bytes.get(16..20).ok_or_else(bad)?.try_into().unwrap()) as usize;
        let numer = bytes.get(20..20 + len).ok_or_else(bad)?;
        let denom = &bytes[20 + len..];
        let denom = BigInt::from_signed_bytes_be(denom);
        if denom <= BigInt::from(0) {
            return Err(Error::Serialization("mock denominator must be positive".into()));
        }
        Ok(MockCiphertext { numer: BigInt::from_signed_bytes_be(numer), denom, tag })
    }
}
