//! Pluggable base homomorphic encryption.
//!
//! Three backends sit behind one runtime-tagged interface:
//!
//! * `exact-additive`: Paillier with `g = n + 1`. Messages are residues mod
//!   `n`, residues above `n/2` decode as negative.
//! * `approx-rlwe`: a CKKS-style scheme over `Z_q[x]/(x^N + 1)` carrying one
//!   real value in the constant coefficient at a tracked scale. It supports
//!   `enc`, `dec`, `+`, `-` and multiplication by plaintext constants only.
//! * `mock`: identity "encryption" with a random nonce, for fast logic tests.
//!
//! Evaluation lives on [`PublicKey`]; decryption on [`SecretKey`]. Operands
//! from different backends are rejected with [`Error::BackendMismatch`].
//!
//! The default parameters are desk-scale and NOT secure for production use.

mod codec;
pub mod mock;
pub mod ntt;
pub mod paillier;
pub mod rlwe;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngMode;

pub use codec::{KEY_MAGIC, KEY_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ExactAdditive,
    ApproxRlwe,
    Mock,
}

impl BackendKind {
    pub fn tag(self) -> u8 {
        match self {
            BackendKind::ExactAdditive => 1,
            BackendKind::ApproxRlwe => 2,
            BackendKind::Mock => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(BackendKind::ExactAdditive),
            2 => Some(BackendKind::ApproxRlwe),
            3 => Some(BackendKind::Mock),
            _ => None,
        }
    }

    /// Whether plaintext constants may be arbitrary reals.
    pub fn supports_real_constants(self) -> bool {
        !matches!(self, BackendKind::ExactAdditive)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::ExactAdditive => "exact-additive",
            BackendKind::ApproxRlwe => "approx-rlwe",
            BackendKind::Mock => "mock",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact-additive" | "paillier" => Ok(BackendKind::ExactAdditive),
            "approx-rlwe" | "ckks" => Ok(BackendKind::ApproxRlwe),
            "mock" => Ok(BackendKind::Mock),
            other => Err(Error::InvalidParams(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendParams {
    pub kind: BackendKind,
    /// Paillier `n` bit-length, or the RLWE coefficient-modulus bit-length.
    pub modulus_bits: u32,
    /// RLWE ring degree `N`.
    pub ring_degree: usize,
    /// RLWE encoding scale `log2(Delta)`.
    pub scale_bits: u32,
    /// RLWE error distribution width.
    pub noise_stddev: f64,
    /// RLWE bound on fresh messages: `|m| < 2^message_bits`.
    pub message_bits: u32,
}

impl BackendParams {
    pub fn exact_additive(modulus_bits: u32) -> Self {
        BackendParams { kind: BackendKind::ExactAdditive, modulus_bits, ..Self::approx_rlwe() }
    }

    /// Desk-scale defaults: `N = 4096`, 120-bit modulus, `Delta = 2^30`.
    pub fn approx_rlwe() -> Self {
        BackendParams {
            kind: BackendKind::ApproxRlwe,
            modulus_bits: 120,
            ring_degree: 4096,
            scale_bits: 30,
            noise_stddev: 3.2,
            message_bits: 30,
        }
    }

    pub fn mock() -> Self {
        BackendParams { kind: BackendKind::Mock, ..Self::approx_rlwe() }
    }

    pub fn for_kind(kind: BackendKind) -> Self {
        match kind {
            BackendKind::ExactAdditive => Self::exact_additive(1024),
            BackendKind::ApproxRlwe => Self::approx_rlwe(),
            BackendKind::Mock => Self::mock(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match self.kind {
            BackendKind::ExactAdditive => {
                if self.modulus_bits < 6 {
                    return bad(format!("Paillier modulus of {} bits is below the 6-bit minimum", self.modulus_bits));
                }
            }
            BackendKind::ApproxRlwe => {
                if !self.ring_degree.is_power_of_two() || self.ring_degree < 16 {
                    return bad(format!("ring degree {} must be a power of two >= 16", self.ring_degree));
                }
                if self.modulus_bits > rlwe::MAX_MODULUS_BITS || self.modulus_bits < 20 {
                    return bad(format!(
                        "RLWE modulus of {} bits outside 20..={}",
                        self.modulus_bits,
                        rlwe::MAX_MODULUS_BITS
                    ));
                }
                if self.scale_bits == 0 || self.message_bits == 0 {
                    return bad("scale_bits and message_bits must be positive".into());
                }
                if 2 * self.scale_bits + self.message_bits + 10 >= self.modulus_bits {
                    return bad(format!(
                        "no depth-1 headroom: 2*{} + {} + 10 >= {}",
                        self.scale_bits, self.message_bits, self.modulus_bits
                    ));
                }
                if !(self.noise_stddev.is_finite() && self.noise_stddev > 0.0) {
                    return bad(format!("noise stddev {} must be positive", self.noise_stddev));
                }
            }
            BackendKind::Mock => {}
        }
        Ok(())
    }
}

/// Exact positive rational scale factor carried by every ciphertext.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scale(Ratio<u128>);

impl Scale {
    pub const ONE: Scale = Scale(Ratio::new_raw(1, 1));

    pub fn new(numer: u128, denom: u128) -> Result<Self> {
        if numer == 0 || denom == 0 {
            return Err(Error::InvalidCiphertext("scale must be positive".into()));
        }
        Ok(Scale(Ratio::new(numer, denom)))
    }

    pub fn pow2(bits: u32) -> Self {
        Scale(Ratio::from_integer(1u128 << bits))
    }

    pub fn numer(&self) -> u128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u128 {
        *self.0.denom()
    }

    pub fn checked_mul(&self, other: &Scale) -> Option<Scale> {
        use num_traits::CheckedMul;
        self.0.checked_mul(&other.0).map(Scale)
    }

    pub fn log2(&self) -> f64 {
        (self.numer() as f64).log2() - (self.denom() as f64).log2()
    }

    pub fn as_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.numer()), BigInt::from(self.denom()))
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 && self.numer().is_power_of_two() {
            write!(f, "2^{}", self.numer().trailing_zeros())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Payload {
    Paillier(BigUint),
    Rlwe(rlwe::RlweCiphertext),
    Mock(mock::MockCiphertext),
}

#[derive(Clone, Debug)]
pub struct Ciphertext {
    pub(crate) payload: Payload,
    pub(crate) scale: Scale,
}

impl Ciphertext {
    pub fn backend(&self) -> BackendKind {
        match &self.payload {
            Payload::Paillier(_) => BackendKind::ExactAdditive,
            Payload::Rlwe(_) => BackendKind::ApproxRlwe,
            Payload::Mock(_) => BackendKind::Mock,
        }
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Backend-specific payload bytes (RLWE pending multipliers folded in).
    pub fn payload_bytes(&self) -> Vec<u8> {
        match &self.payload {
            Payload::Paillier(c) => c.to_bytes_be(),
            Payload::Rlwe(c) => c.to_bytes(),
            Payload::Mock(c) => c.to_bytes(),
        }
    }

    /// Tag, scale numerator/denominator and payload, length-prefixed.
    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode_ciphertext(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        codec::decode_ciphertext(bytes)
    }

    /// SHA-256 of the serialized ciphertext.
    pub fn digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        Sha256::digest(self.to_bytes()).into()
    }

    /// Cheap 64-bit payload fingerprint for bulk uniqueness checks.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.backend().tag().hash(&mut h);
        match &self.payload {
            Payload::Paillier(c) => c.hash(&mut h),
            Payload::Rlwe(c) => c.hash_payload(&mut h),
            Payload::Mock(c) => c.hash(&mut h),
        }
        h.finish()
    }
}

fn check_kind(expected: BackendKind, ct: &Ciphertext) -> Result<()> {
    if ct.backend() != expected {
        return Err(Error::BackendMismatch { expected, found: ct.backend() });
    }
    Ok(())
}

fn check_scales(a: &Ciphertext, b: &Ciphertext) -> Result<()> {
    if a.scale != b.scale {
        return Err(Error::ScaleMismatch { left: a.scale.to_string(), right: b.scale.to_string() });
    }
    Ok(())
}

/// Public evaluation key: encryption plus all homomorphic operations.
#[derive(Clone, Debug)]
pub enum PublicKey {
    ExactAdditive(Arc<paillier::PaillierPublicKey>),
    ApproxRlwe(Arc<rlwe::RlwePublicKey>),
    Mock(mock::MockKey),
}

impl PublicKey {
    pub fn kind(&self) -> BackendKind {
        match self {
            PublicKey::ExactAdditive(_) => BackendKind::ExactAdditive,
            PublicKey::ApproxRlwe(_) => BackendKind::ApproxRlwe,
            PublicKey::Mock(_) => BackendKind::Mock,
        }
    }

    /// SHA-256 over the backend tag and key material; identifies the key
    /// in pool snapshots.
    pub fn key_id(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update([self.kind().tag()]);
        h.update(codec::public_body(self));
        h.finalize().into()
    }

    /// Largest integer magnitude a fresh ciphertext may carry, if bounded.
    pub fn message_limit(&self) -> Option<BigUint> {
        match self {
            PublicKey::ExactAdditive(pk) => Some(pk.half_modulus().clone()),
            PublicKey::ApproxRlwe(pk) => Some((BigUint::one() << pk.context().message_bits()) - 1u32),
            PublicKey::Mock(_) => None,
        }
    }

    pub fn enc<R: Rng + ?Sized>(&self, m: &BigRational, rng: &mut R) -> Result<Ciphertext> {
        match self {
            PublicKey::ExactAdditive(pk) => {
                let c = pk.encrypt(&integer_message(m)?, rng)?;
                Ok(Ciphertext { payload: Payload::Paillier(c), scale: Scale::ONE })
            }
            PublicKey::ApproxRlwe(pk) => {
                let c = pk.encrypt(m, rng)?;
                Ok(Ciphertext { payload: Payload::Rlwe(c), scale: pk.context().fresh_scale() })
            }
            PublicKey::Mock(key) => Ok(Ciphertext { payload: Payload::Mock(key.encrypt(m, rng)), scale: Scale::ONE }),
        }
    }

    pub fn enc_int<R: Rng + ?Sized>(&self, m: i64, rng: &mut R) -> Result<Ciphertext> {
        self.enc(&BigRational::from_integer(m.into()), rng)
    }

    pub fn eval_add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        self.combine(a, b, false)
    }

    pub fn eval_sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        self.combine(a, b, true)
    }

    fn combine(&self, a: &Ciphertext, b: &Ciphertext, subtract: bool) -> Result<Ciphertext> {
        let kind = self.kind();
        check_kind(kind, a)?;
        check_kind(kind, b)?;
        check_scales(a, b)?;
        let payload = match (self, &a.payload, &b.payload) {
            (PublicKey::ExactAdditive(pk), Payload::Paillier(x), Payload::Paillier(y)) => {
                Payload::Paillier(if subtract { pk.sub(x, y)? } else { pk.add(x, y) })
            }
            (PublicKey::ApproxRlwe(pk), Payload::Rlwe(x), Payload::Rlwe(y)) => {
                Payload::Rlwe(pk.combine(x, y, subtract)?)
            }
            (PublicKey::Mock(_), Payload::Mock(x), Payload::Mock(y)) => Payload::Mock(x.combine(y, subtract)),
            _ => unreachable!("kinds checked above"),
        };
        Ok(Ciphertext { payload, scale: a.scale })
    }

    /// Multiply by a plaintext constant.
    ///
    /// On `approx-rlwe` the constant is encoded at scale `2^scale_bits`, so
    /// the result scale is `ct.scale * 2^scale_bits` (no rescaling). On
    /// `exact-additive` only non-negative integers are accepted.
    pub fn eval_mul_plain(&self, c: &BigRational, ct: &Ciphertext) -> Result<Ciphertext> {
        check_kind(self.kind(), ct)?;
        match (self, &ct.payload) {
            (PublicKey::ExactAdditive(pk), Payload::Paillier(x)) => {
                let k = integer_message(c)?;
                let k = k.to_biguint().ok_or_else(|| {
                    Error::NonInteger(format!("negative constant {k} needs the scale-preserving negate"))
                })?;
                Ok(Ciphertext { payload: Payload::Paillier(pk.mul_const(x, &k)), scale: ct.scale })
            }
            (PublicKey::ApproxRlwe(pk), Payload::Rlwe(x)) => {
                let (payload, lift) = pk.mul_const(c, x, &ct.scale)?;
                let scale = ct
                    .scale
                    .checked_mul(&lift)
                    .ok_or_else(|| Error::BudgetOverflow(format!("scale {} times {lift} overflows", ct.scale)))?;
                Ok(Ciphertext { payload: Payload::Rlwe(payload), scale })
            }
            (PublicKey::Mock(_), Payload::Mock(x)) => {
                Ok(Ciphertext { payload: Payload::Mock(x.scaled(c)), scale: ct.scale })
            }
            _ => unreachable!("kind checked above"),
        }
    }

    /// Scale-preserving negation (`rp+` sign flips, negative plaintexts).
    pub fn negate(&self, ct: &Ciphertext) -> Result<Ciphertext> {
        check_kind(self.kind(), ct)?;
        let payload = match (self, &ct.payload) {
            (PublicKey::ExactAdditive(pk), Payload::Paillier(x)) => Payload::Paillier(pk.negate(x)?),
            (PublicKey::ApproxRlwe(pk), Payload::Rlwe(x)) => Payload::Rlwe(pk.negate(x)),
            (PublicKey::Mock(_), Payload::Mock(x)) => Payload::Mock(x.negated()),
            _ => unreachable!("kind checked above"),
        };
        Ok(Ciphertext { payload, scale: ct.scale })
    }
}

#[derive(Clone, Debug)]
pub enum SecretKey {
    ExactAdditive(Arc<paillier::PaillierSecretKey>),
    ApproxRlwe(Arc<rlwe::RlweSecretKey>),
    Mock(mock::MockKey),
}

impl SecretKey {
    pub fn kind(&self) -> BackendKind {
        match self {
            SecretKey::ExactAdditive(_) => BackendKind::ExactAdditive,
            SecretKey::ApproxRlwe(_) => BackendKind::ApproxRlwe,
            SecretKey::Mock(_) => BackendKind::Mock,
        }
    }

    /// Exact backends return the exact message; `approx-rlwe` returns the
    /// decoded payload divided by the tracked scale.
    pub fn dec(&self, ct: &Ciphertext) -> Result<BigRational> {
        check_kind(self.kind(), ct)?;
        match (self, &ct.payload) {
            (SecretKey::ExactAdditive(sk), Payload::Paillier(c)) => Ok(BigRational::from_integer(sk.decrypt(c)?)),
            (SecretKey::ApproxRlwe(sk), Payload::Rlwe(c)) => {
                let raw = sk.decrypt_raw(c)?;
                Ok(BigRational::new(BigInt::from(raw), BigInt::one()) / ct.scale.as_rational())
            }
            (SecretKey::Mock(_), Payload::Mock(c)) => Ok(c.value()),
            _ => unreachable!("kind checked above"),
        }
    }

    pub fn dec_f64(&self, ct: &Ciphertext) -> Result<f64> {
        Ok(to_f64(&self.dec(ct)?))
    }
}

/// A generated key pair with the parameters that produced it.
#[derive(Clone, Debug)]
pub struct KeyMaterial {
    pub params: BackendParams,
    pub public: PublicKey,
    pub secret: SecretKey,
}

impl KeyMaterial {
    /// Serialized public part: magic, backend tag, version, length-prefixed blobs.
    pub fn public_bytes(&self) -> Vec<u8> {
        codec::encode_public(&self.params, &self.public)
    }

    pub fn secret_bytes(&self) -> Vec<u8> {
        codec::encode_secret(&self.params, &self.secret)
    }

    pub fn from_bytes(public: &[u8], secret: &[u8]) -> Result<Self> {
        let (params, public) = codec::decode_public(public)?;
        let (sparams, secret) = codec::decode_secret(secret, &public)?;
        if sparams != params {
            return Err(Error::Serialization("public and secret parts disagree on parameters".into()));
        }
        Ok(KeyMaterial { params, public, secret })
    }

    pub fn public_from_bytes(public: &[u8]) -> Result<(BackendParams, PublicKey)> {
        codec::decode_public(public)
    }
}

/// Generate keys. With a seed the result is deterministic (test mode);
/// without one the randomness comes from the operating system.
pub fn keygen(params: &BackendParams, seed: Option<u64>) -> Result<KeyMaterial> {
    params.validate()?;
    let mut rng = RngMode::from_seed(seed).rng();
    let (public, secret) = match params.kind {
        BackendKind::ExactAdditive => {
            let (pk, sk) = paillier::keygen(params.modulus_bits, &mut rng)?;
            (PublicKey::ExactAdditive(Arc::new(pk)), SecretKey::ExactAdditive(Arc::new(sk)))
        }
        BackendKind::ApproxRlwe => {
            let ctx = Arc::new(rlwe::RlweContext::new(params)?);
            let (pk, sk) = rlwe::keygen(&ctx, &mut rng);
            (PublicKey::ApproxRlwe(Arc::new(pk)), SecretKey::ApproxRlwe(Arc::new(sk)))
        }
        BackendKind::Mock => (PublicKey::Mock(mock::MockKey), SecretKey::Mock(mock::MockKey)),
    };
    Ok(KeyMaterial { params: params.clone(), public, secret })
}

fn integer_message(m: &BigRational) -> Result<BigInt> {
    if !m.is_integer() {
        return Err(Error::NonInteger(m.to_string()));
    }
    Ok(m.to_integer())
}

/// Convenience: an integer plaintext.
pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Convenience: the exact rational value of a binary float.
pub fn real(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

pub fn to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or_else(|| if v.is_zero() { 0.0 } else { f64::NAN })
}
