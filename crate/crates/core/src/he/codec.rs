//! Byte formats for keys and ciphertexts.
//!
//! Keys: `KEY_MAGIC | backend tag | version | role | blob*`, where every
//! blob is a big-endian `u32` length followed by its bytes. The first blob
//! always echoes the backend parameters.
//!
//! Ciphertexts: `tag | blob(scale numerator) | blob(scale denominator) |
//! blob(payload)`.

use std::sync::Arc;

use num_bigint::BigUint;

use super::mock::{MockCiphertext, MockKey};
use super::paillier::{PaillierPublicKey, PaillierSecretKey};
use super::rlwe::{RlweCiphertext, RlweContext, RlwePublicKey, RlweSecretKey};
use super::{BackendKind, BackendParams, Ciphertext, Payload, PublicKey, Scale, SecretKey};
use crate::error::{Error, Result};

pub const KEY_MAGIC: [u8; 4] = *b"STRK";
pub const KEY_VERSION: u8 = 1;
const ROLE_PUBLIC: u8 = b'P';
const ROLE_SECRET: u8 = b'S';

fn put_blob(out: &mut Vec<u8>, blob: &[u8]) {
    out.extend_from_slice(&(blob.len() as u32).to_be_bytes());
    out.extend_from_slice(blob);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Serialization(format!("truncated input at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn byte(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn blob(&mut self) -> Result<&'a [u8]> {
        let len = u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize;
        self.take(len)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Serialization(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}

fn u128_from_be(bytes: &[u8]) -> Result<u128> {
    if bytes.len() > 16 {
        return Err(Error::Serialization("scale component wider than 128 bits".into()));
    }
    let mut buf = [0u8; 16];
    buf[16 - bytes.len()..].copy_from_slice(bytes);
    Ok(u128::from_be_bytes(buf))
}

fn trimmed_be(v: u128) -> Vec<u8> {
    let bytes = v.to_be_bytes();
    let first = bytes.iter().position(|&b| b != 0).unwrap_or(15);
    bytes[first..].to_vec()
}

pub(super) fn encode_ciphertext(ct: &Ciphertext) -> Vec<u8> {
    let payload = ct.payload_bytes();
    let mut out = Vec::with_capacity(payload.len() + 32);
    out.push(ct.backend().tag());
    put_blob(&mut out, &trimmed_be(ct.scale.numer()));
    put_blob(&mut out, &trimmed_be(ct.scale.denom()));
    put_blob(&mut out, &payload);
    out
}

pub(super) fn decode_ciphertext(bytes: &[u8]) -> Result<Ciphertext> {
    let mut r = Reader::new(bytes);
    let tag = r.byte()?;
    let kind = BackendKind::from_tag(tag).ok_or_else(|| Error::Serialization(format!("unknown backend tag {tag}")))?;
    let scale = Scale::new(u128_from_be(r.blob()?)?, u128_from_be(r.blob()?)?)?;
    let payload = r.blob()?;
    r.finish()?;
    let payload = match kind {
        BackendKind::ExactAdditive => Payload::Paillier(BigUint::from_bytes_be(payload)),
        BackendKind::ApproxRlwe => Payload::Rlwe(RlweCiphertext::from_bytes(payload)?),
        BackendKind::Mock => Payload::Mock(MockCiphertext::from_bytes(payload)?),
    };
    Ok(Ciphertext { payload, scale })
}

fn encode_params(p: &BackendParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(28);
    out.extend_from_slice(&p.modulus_bits.to_be_bytes());
    out.extend_from_slice(&(p.ring_degree as u64).to_be_bytes());
    out.extend_from_slice(&p.scale_bits.to_be_bytes());
    out.extend_from_slice(&p.noise_stddev.to_bits().to_be_bytes());
    out.extend_from_slice(&p.message_bits.to_be_bytes());
    out
}

fn decode_params(kind: BackendKind, bytes: &[u8]) -> Result<BackendParams> {
    let mut r = Reader::new(bytes);
    let u32_at = |r: &mut Reader| -> Result<u32> { Ok(u32::from_be_bytes(r.take(4)?.try_into().unwrap())) };
    let u64_at = |r: &mut Reader| -> Result<u64> { Ok(u64::from_be_bytes(r.take(8)?.try_into().unwrap())) };
    let params = BackendParams {
        kind,
        modulus_bits: u32_at(&mut r)?,
        ring_degree: u64_at(&mut r)? as usize,
        scale_bits: u32_at(&mut r)?,
        noise_stddev: f64::from_bits(u64_at(&mut r)?),
        message_bits: u32_at(&mut r)?,
    };
    r.finish()?;
    params.validate()?;
    Ok(params)
}

fn header(out: &mut Vec<u8>, kind: BackendKind, role: u8, params: &BackendParams) {
    out.extend_from_slice(&KEY_MAGIC);
    out.push(kind.tag());
    out.push(KEY_VERSION);
    out.push(role);
    put_blob(out, &encode_params(params));
}

fn read_header<'a>(bytes: &'a [u8], role: u8) -> Result<(Reader<'a>, BackendParams)> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != KEY_MAGIC {
        return Err(Error::Serialization("not a key file (bad magic)".into()));
    }
    let tag = r.byte()?;
    let kind = BackendKind::from_tag(tag).ok_or_else(|| Error::Serialization(format!("unknown backend tag {tag}")))?;
    let version = r.byte()?;
    if version != KEY_VERSION {
        return Err(Error::Serialization(format!("unsupported key version {version}")));
    }
    let found = r.byte()?;
    if found != role {
        return Err(Error::Serialization(format!(
            "expected a {} key",
            if role == ROLE_PUBLIC { "public" } else { "secret" }
        )));
    }
    let params = decode_params(kind, r.blob()?)?;
    Ok((r, params))
}

fn words_be(words: &[u64]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_be_bytes()).collect()
}

fn words_from_be(bytes: &[u8], expected: usize) -> Result<Vec<u64>> {
    if bytes.len() != expected * 8 {
        return Err(Error::Serialization(format!("expected {expected} words, got {} bytes", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| u64::from_be_bytes(c.try_into().unwrap())).collect())
}

pub(super) fn encode_public(params: &BackendParams, pk: &PublicKey) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, pk.kind(), ROLE_PUBLIC, params);
    out.extend_from_slice(&public_body(pk));
    out
}

/// Key-specific blobs of a public key, without the header.
pub(super) fn public_body(pk: &PublicKey) -> Vec<u8> {
    let mut out = Vec::new();
    match pk {
        PublicKey::ExactAdditive(pk) => put_blob(&mut out, &pk.modulus().to_bytes_be()),
        PublicKey::ApproxRlwe(pk) => {
            let (a, b) = pk.ntt_parts();
            for poly in a.iter().chain(b) {
                put_blob(&mut out, &words_be(poly));
            }
        }
        PublicKey::Mock(_) => {}
    }
    out
}

pub(super) fn decode_public(bytes: &[u8]) -> Result<(BackendParams, PublicKey)> {
    let (mut r, params) = read_header(bytes, ROLE_PUBLIC)?;
    let pk = match params.kind {
        BackendKind::ExactAdditive => {
            let n = BigUint::from_bytes_be(r.blob()?);
            PublicKey::ExactAdditive(Arc::new(PaillierPublicKey::new(n)?))
        }
        BackendKind::ApproxRlwe => {
            let ctx = Arc::new(RlweContext::new(&params)?);
            let k = ctx.primes().len();
            let mut polys = Vec::with_capacity(2 * k);
            for i in 0..2 * k {
                let poly = words_from_be(r.blob()?, ctx.degree())?;
                let p = ctx.primes()[i % k];
                if poly.iter().any(|&v| v >= p) {
                    return Err(Error::Serialization("public key residue out of range".into()));
                }
                polys.push(poly);
            }
            let b = polys.split_off(k);
            PublicKey::ApproxRlwe(Arc::new(RlwePublicKey::from_parts(ctx, polys, b)))
        }
        BackendKind::Mock => PublicKey::Mock(MockKey),
    };
    r.finish()?;
    Ok((params, pk))
}

pub(super) fn encode_secret(params: &BackendParams, sk: &SecretKey) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, sk.kind(), ROLE_SECRET, params);
    match sk {
        SecretKey::ExactAdditive(sk) => {
            let (p, q) = sk.primes();
            put_blob(&mut out, &p.to_bytes_be());
            put_blob(&mut out, &q.to_bytes_be());
        }
        SecretKey::ApproxRlwe(sk) => {
            let mut blob = Vec::with_capacity(sk.ternary().len() * 9);
            for &(idx, neg) in sk.ternary() {
                blob.extend_from_slice(&(idx as u64).to_be_bytes());
                blob.push(neg as u8);
            }
            put_blob(&mut out, &blob);
        }
        SecretKey::Mock(_) => {}
    }
    out
}

pub(super) fn decode_secret(bytes: &[u8], public: &PublicKey) -> Result<(BackendParams, SecretKey)> {
    let (mut r, params) = read_header(bytes, ROLE_SECRET)?;
    if params.kind != public.kind() {
        return Err(Error::BackendMismatch { expected: public.kind(), found: params.kind });
    }
    let sk = match public {
        PublicKey::ExactAdditive(pk) => {
            let p = BigUint::from_bytes_be(r.blob()?);
            let q = BigUint::from_bytes_be(r.blob()?);
            let sk = PaillierSecretKey::from_primes(p, q)?;
            if sk.public().modulus() != pk.modulus() {
                return Err(Error::Serialization("secret key does not match the public key".into()));
            }
            SecretKey::ExactAdditive(Arc::new(sk))
        }
        PublicKey::ApproxRlwe(pk) => {
            let ctx = pk.context().clone();
            if ctx.params() != &params {
                return Err(Error::Serialization("secret key parameters differ from the public key".into()));
            }
            let blob = r.blob()?;
            if blob.len() % 9 != 0 {
                return Err(Error::Serialization("malformed secret polynomial".into()));
            }
            let mut s = Vec::with_capacity(blob.len() / 9);
            for chunk in blob.chunks_exact(9) {
                let idx = u64::from_be_bytes(chunk[..8].try_into().unwrap()) as usize;
                if idx >= ctx.degree() || chunk[8] > 1 {
                    return Err(Error::Serialization("secret coefficient out of range".into()));
                }
                s.push((idx, chunk[8] == 1));
            }
            SecretKey::ApproxRlwe(Arc::new(RlweSecretKey::from_parts(ctx, s)))
        }
        PublicKey::Mock(_) => SecretKey::Mock(MockKey),
    };
    r.finish()?;
    Ok((params, sk))
}
