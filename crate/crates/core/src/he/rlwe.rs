//! Approximate-number RLWE encryption of a single real value.
//!
//! A value `m` is encoded as `round(m * Delta)` in the constant coefficient
//! of a plaintext polynomial in `Z_q[x]/(x^N + 1)`. The modulus `q` is a
//! product of at most two NTT-friendly primes and all arithmetic runs in
//! residue-number-system form.
//!
//! Public-key encryption: `(b*v + e0 + pt, a*v + e1)` where
//! `(b, a) = (-a*s + e, a)`. Secret and ephemeral keys are sparse ternary.
//!
//! Multiplying by a plaintext constant does not touch the polynomials: each
//! ciphertext carries a pending integer multiplier (one residue per prime)
//! that is folded in by the next addition, by serialization, or at
//! decryption. This keeps `⊙` O(1) while `⊕` pays one fused pass.

use std::borrow::Cow;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ntt::{self, add_mod, mul_mod, mul_shoup, shoup_precompute, sub_mod, NttPlan};
use super::{BackendParams, Scale};
use crate::error::{Error, Result};

/// Two 62-bit primes.
pub const MAX_MODULUS_BITS: u32 = 124;
const MAX_PRIMES: usize = 2;
/// Nonzero coefficients in the secret and in each ephemeral key.
pub const HAMMING_WEIGHT: usize = 64;

#[derive(Debug)]
pub struct RlweContext {
    params: BackendParams,
    n: usize,
    plans: Vec<NttPlan>,
    primes: Vec<u64>,
    q: u128,
    /// `floor(log2 q)`.
    q_bits: u32,
    /// `p0^-1 mod p1`, for Garner reconstruction.
    p0_inv_p1: u64,
    hamming: usize,
    noise: Normal<f64>,
}

impl RlweContext {
    pub fn new(params: &BackendParams) -> Result<Self> {
        params.validate()?;
        let n = params.ring_degree;
        let count = params.modulus_bits.div_ceil(ntt::MAX_PRIME_BITS) as usize;
        debug_assert!(count <= MAX_PRIMES);
        let mut primes = Vec::with_capacity(count);
        let mut remaining = params.modulus_bits;
        for i in 0..count {
            let bits = remaining.div_ceil((count - i) as u32);
            remaining -= bits;
            let p = ntt::find_ntt_prime(bits, n, &primes)
                .ok_or_else(|| Error::InvalidParams(format!("no {bits}-bit NTT prime for N = {n}")))?;
            primes.push(p);
        }
        let plans = primes.iter().map(|&p| NttPlan::new(p, n).expect("prime is 1 mod 2N")).collect::<Vec<_>>();
        let q = primes.iter().fold(1u128, |acc, &p| acc * p as u128);
        let p0_inv_p1 = if count == 2 { ntt::inv_mod(primes[0] % primes[1], primes[1]) } else { 0 };
        let noise = Normal::new(0.0, params.noise_stddev)
            .map_err(|e| Error::InvalidParams(format!("noise distribution: {e}")))?;
        Ok(RlweContext {
            params: params.clone(),
            n,
            plans,
            primes,
            q,
            q_bits: 127 - q.leading_zeros(),
            p0_inv_p1,
            hamming: HAMMING_WEIGHT.min(n / 2),
            noise,
        })
    }

    pub fn params(&self) -> &BackendParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn modulus(&self) -> u128 {
        self.q
    }

    pub fn message_bits(&self) -> u32 {
        self.params.message_bits
    }

    pub fn fresh_scale(&self) -> Scale {
        Scale::pow2(self.params.scale_bits)
    }

    fn body_len(&self) -> usize {
        2 * self.primes.len() * self.n
    }

    /// Offset of `(poly, prime)` inside a ciphertext body.
    #[inline]
    fn offset(&self, poly: usize, prime: usize) -> usize {
        (poly * self.primes.len() + prime) * self.n
    }

    fn residues_of(&self, v: i128) -> [u64; MAX_PRIMES] {
        let mut out = [0u64; MAX_PRIMES];
        for (slot, &p) in out.iter_mut().zip(&self.primes) {
            *slot = v.rem_euclid(p as i128) as u64;
        }
        out
    }

    /// Centered lift of residues to `(-q/2, q/2]`.
    fn reconstruct(&self, res: &[u64]) -> i128 {
        let x: u128 = match self.primes.len() {
            1 => res[0] as u128,
            _ => {
                let (p0, p1) = (self.primes[0], self.primes[1]);
                let diff = sub_mod(res[1], res[0] % p1, p1);
                let t = mul_mod(diff, self.p0_inv_p1, p1);
                res[0] as u128 + p0 as u128 * t as u128
            }
        };
        if x > self.q / 2 {
            x as i128 - self.q as i128
        } else {
            x as i128
        }
    }

    fn sample_ternary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(usize, bool)> {
        index::sample(rng, self.n, self.hamming).into_iter().map(|i| (i, rng.random::<bool>())).collect()
    }

    fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        (0..self.n).map(|_| self.noise.sample(rng).round() as i64).collect()
    }

    fn ternary_ntt(&self, t: &[(usize, bool)], prime: usize) -> Vec<u64> {
        let p = self.primes[prime];
        let mut v = vec![0u64; self.n];
        for &(i, neg) in t {
            v[i] = if neg { p - 1 } else { 1 };
        }
        self.plans[prime].forward(&mut v);
        v
    }

    /// Round `c * 2^scale_bits` to an integer, half away from zero.
    /// `None` when the result does not fit an `i128`.
    fn encode_constant(&self, c: &BigRational) -> Option<i128> {
        let bits = self.params.scale_bits;
        if let (Some(num), Some(den)) = (c.numer().to_i64(), c.denom().to_i64()) {
            if bits <= 62 {
                let (num, den) = (i128::from(num) << bits, i128::from(den));
                let (q, r) = (num / den, num % den);
                return Some(if 2 * r.abs() >= den { q + num.signum() } else { q });
            }
        }
        let shifted = c * BigRational::from_integer(BigInt::from(1u8) << bits);
        shifted.round().to_integer().to_i128()
    }
}

/// `x mod p` for `|x| < p`.
#[inline]
fn small_residue(x: i64, p: u64) -> u64 {
    if x >= 0 {
        x as u64
    } else {
        p - x.unsigned_abs()
    }
}

#[derive(Clone, Debug)]
struct Poly2 {
    /// NTT-domain values for each prime, with Shoup quotients.
    values: Vec<Vec<u64>>,
    shoup: Vec<Vec<u64>>,
}

impl Poly2 {
    fn new(values: Vec<Vec<u64>>, primes: &[u64]) -> Self {
        let shoup =
            values.iter().zip(primes).map(|(v, &p)| v.iter().map(|&w| shoup_precompute(w, p)).collect()).collect();
        Poly2 { values, shoup }
    }
}

#[derive(Debug)]
pub struct RlwePublicKey {
    ctx: Arc<RlweContext>,
    a: Poly2,
    b: Poly2,
}

#[derive(Debug)]
pub struct RlweSecretKey {
    ctx: Arc<RlweContext>,
    /// Nonzero positions of the ternary secret and whether they are -1.
    s: Vec<(usize, bool)>,
}

pub fn keygen<R: Rng + ?Sized>(ctx: &Arc<RlweContext>, rng: &mut R) -> (RlwePublicKey, RlweSecretKey) {
    let s = ctx.sample_ternary(rng);
    let e = ctx.sample_noise(rng);
    let mut a_vals = Vec::new();
    let mut b_vals = Vec::new();
    for (i, &p) in ctx.primes.iter().enumerate() {
        let a: Vec<u64> = (0..ctx.n).map(|_| rng.random_range(0..p)).collect();
        let s_hat = ctx.ternary_ntt(&s, i);
        let mut e_hat: Vec<u64> = e.iter().map(|&x| small_residue(x, p)).collect();
        ctx.plans[i].forward(&mut e_hat);
        let b: Vec<u64> =
            a.iter().zip(&s_hat).zip(&e_hat).map(|((&ai, &si), &ei)| sub_mod(ei, mul_mod(ai, si, p), p)).collect();
        a_vals.push(a);
        b_vals.push(b);
    }
    let pk = RlwePublicKey::from_parts(ctx.clone(), a_vals, b_vals);
    (pk, RlweSecretKey { ctx: ctx.clone(), s })
}

impl RlwePublicKey {
    pub(crate) fn from_parts(ctx: Arc<RlweContext>, a: Vec<Vec<u64>>, b: Vec<Vec<u64>>) -> Self {
        let a = Poly2::new(a, &ctx.primes);
        let b = Poly2::new(b, &ctx.primes);
        RlwePublicKey { ctx, a, b }
    }

    pub fn context(&self) -> &Arc<RlweContext> {
        &self.ctx
    }

    pub(crate) fn ntt_parts(&self) -> (&[Vec<u64>], &[Vec<u64>]) {
        (&self.a.values, &self.b.values)
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigRational, rng: &mut R) -> Result<RlweCiphertext> {
        let ctx = &self.ctx;
        if m.abs() >= BigRational::from_integer(BigInt::from(1u8) << ctx.params.message_bits) {
            return Err(Error::MessageOutOfRange(format!("|{m}| >= 2^{}", ctx.params.message_bits)));
        }
        let encoded = ctx.encode_constant(m).expect("bounded by message budget");
        let enc_res = ctx.residues_of(encoded);
        let v = ctx.sample_ternary(rng);
        let e0 = ctx.sample_noise(rng);
        let e1 = ctx.sample_noise(rng);
        let n = ctx.n;
        let mut body = vec![0u64; ctx.body_len()];
        for (i, &p) in ctx.primes.iter().enumerate() {
            let v_hat = ctx.ternary_ntt(&v, i);
            for (poly, (key, noise)) in [(&self.b, &e0), (&self.a, &e1)].into_iter().enumerate() {
                let off = ctx.offset(poly, i);
                let out = &mut body[off..off + n];
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = mul_shoup(v_hat[j], key.values[i][j], key.shoup[i][j], p);
                }
                ctx.plans[i].inverse(out);
                for (slot, &e) in out.iter_mut().zip(noise.iter()) {
                    *slot = add_mod(*slot, small_residue(e, p), p);
                }
                if poly == 0 {
                    out[0] = add_mod(out[0], enc_res[i], p);
                }
            }
        }
        Ok(RlweCiphertext { body: Arc::new(body), factor: None })
    }

    /// `x ± y`, folding any pending multipliers in the same pass.
    pub fn combine(&self, x: &RlweCiphertext, y: &RlweCiphertext, subtract: bool) -> Result<RlweCiphertext> {
        let ctx = &self.ctx;
        if x.body.len() != ctx.body_len() || y.body.len() != ctx.body_len() {
            return Err(Error::InvalidCiphertext("RLWE body has the wrong length".into()));
        }
        let mut body = vec![0u64; ctx.body_len()];
        let n = ctx.n;
        for (i, &p) in ctx.primes.iter().enumerate() {
            let fx = x.factor.map(|f| f.residues[i]);
            let fy = match (y.factor.map(|f| f.residues[i]), subtract) {
                (g, false) => g,
                (g, true) => Some(p - g.unwrap_or(1)),
            };
            for poly in 0..2 {
                let off = ctx.offset(poly, i);
                let out = &mut body[off..off + n];
                let xs = &x.body[off..off + n];
                let ys = &y.body[off..off + n];
                match (fx, fy) {
                    (None, None) => {
                        for ((o, &a), &b) in out.iter_mut().zip(xs).zip(ys) {
                            *o = add_mod(a, b, p);
                        }
                    }
                    (None, Some(g)) => {
                        let gs = shoup_precompute(g, p);
                        for ((o, &a), &b) in out.iter_mut().zip(xs).zip(ys) {
                            *o = add_mod(a, mul_shoup(b, g, gs, p), p);
                        }
                    }
                    (Some(f), None) => {
                        let fs = shoup_precompute(f, p);
                        for ((o, &a), &b) in out.iter_mut().zip(xs).zip(ys) {
                            *o = add_mod(mul_shoup(a, f, fs, p), b, p);
                        }
                    }
                    (Some(f), Some(g)) => {
                        let fs = shoup_precompute(f, p);
                        let gs = shoup_precompute(g, p);
                        for ((o, &a), &b) in out.iter_mut().zip(xs).zip(ys) {
                            *o = add_mod(mul_shoup(a, f, fs, p), mul_shoup(b, g, gs, p), p);
                        }
                    }
                }
            }
        }
        Ok(RlweCiphertext { body: Arc::new(body), factor: None })
    }

    /// Record `c` (encoded at `2^scale_bits`) as a pending multiplier.
    /// Returns the new payload and the factor by which the scale grows.
    pub fn mul_const(&self, c: &BigRational, x: &RlweCiphertext, scale: &Scale) -> Result<(RlweCiphertext, Scale)> {
        let ctx = &self.ctx;
        let too_big =
            || Error::BudgetOverflow(format!("constant {c} at scale {scale} exceeds the {}-bit modulus", ctx.q_bits));
        let encoded = ctx.encode_constant(c).ok_or_else(too_big)?;
        let const_bits = f64::from(128 - encoded.unsigned_abs().leading_zeros());
        let needed = const_bits + scale.log2() + f64::from(ctx.params.message_bits);
        if needed >= f64::from(ctx.q_bits - 1) {
            return Err(too_big());
        }
        let base = x.factor.unwrap_or_else(|| Factor::identity(ctx));
        let factor = base.map(|f, p| mul_mod(f, (encoded.rem_euclid(p as i128)) as u64, p));
        Ok((RlweCiphertext { body: x.body.clone(), factor: Some(factor) }, ctx.fresh_scale()))
    }

    pub fn negate(&self, x: &RlweCiphertext) -> RlweCiphertext {
        let base = x.factor.unwrap_or_else(|| Factor::identity(&self.ctx));
        let factor = base.map(|f, p| (p - f) % p);
        RlweCiphertext { body: x.body.clone(), factor: Some(factor) }
    }
}

impl RlweSecretKey {
    pub(crate) fn from_parts(ctx: Arc<RlweContext>, s: Vec<(usize, bool)>) -> Self {
        RlweSecretKey { ctx, s }
    }

    pub fn context(&self) -> &Arc<RlweContext> {
        &self.ctx
    }

    pub(crate) fn ternary(&self) -> &[(usize, bool)] {
        &self.s
    }

    /// Centered constant coefficient of `c0 + c1*s`, times any pending
    /// multiplier. Only the constant coefficient is ever needed.
    pub fn decrypt_raw(&self, x: &RlweCiphertext) -> Result<i128> {
        let ctx = &self.ctx;
        if x.body.len() != ctx.body_len() {
            return Err(Error::InvalidCiphertext("RLWE body has the wrong length".into()));
        }
        let n = ctx.n;
        let mut res = [0u64; MAX_PRIMES];
        for (i, &p) in ctx.primes.iter().enumerate() {
            let c0 = &x.body[ctx.offset(0, i)..ctx.offset(0, i) + n];
            let c1 = &x.body[ctx.offset(1, i)..ctx.offset(1, i) + n];
            if c0.iter().chain(c1).any(|&v| v >= p) {
                return Err(Error::InvalidCiphertext("RLWE residue out of range".into()));
            }
            // (c1 * s)[0] = c1[0] s[0] - sum_{k>0} c1[N-k] s[k]
            let mut acc = c0[0];
            for &(k, neg) in &self.s {
                let (term, flip) = if k == 0 { (c1[0], false) } else { (c1[n - k], true) };
                acc = if neg ^ flip { sub_mod(acc, term, p) } else { add_mod(acc, term, p) };
            }
            if let Some(f) = x.factor {
                acc = mul_mod(acc, f.residues[i], p);
            }
            res[i] = acc;
        }
        Ok(ctx.reconstruct(&res[..ctx.primes.len()]))
    }
}

/// Pending integer multiplier, one residue per prime. The primes travel
/// with it so a ciphertext can be materialized without its key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Factor {
    residues: [u64; MAX_PRIMES],
    primes: [u64; MAX_PRIMES],
    count: usize,
}

impl Factor {
    fn identity(ctx: &RlweContext) -> Self {
        let mut primes = [0u64; MAX_PRIMES];
        primes[..ctx.primes.len()].copy_from_slice(&ctx.primes);
        Factor { residues: [1; MAX_PRIMES], primes, count: ctx.primes.len() }
    }

    fn map(self, f: impl Fn(u64, u64) -> u64) -> Self {
        let mut out = self;
        for i in 0..self.count {
            out.residues[i] = f(self.residues[i], self.primes[i]);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RlweCiphertext {
    /// `[c0 | c1]`, each stored prime by prime in coefficient form.
    body: Arc<Vec<u64>>,
    factor: Option<Factor>,
}

impl RlweCiphertext {
    pub(crate) fn from_body(body: Vec<u64>) -> Self {
        RlweCiphertext { body: Arc::new(body), factor: None }
    }

    /// Number of residues in the body.
    pub fn words(&self) -> usize {
        self.body.len()
    }

    pub fn has_pending_factor(&self) -> bool {
        self.factor.is_some()
    }

    /// Body with any pending multiplier applied.
    fn materialized(&self) -> Cow<'_, [u64]> {
        let Some(f) = self.factor else {
            return Cow::Borrowed(&self.body[..]);
        };
        let chunk = self.body.len() / (2 * f.count);
        let mut out = self.body.to_vec();
        for (idx, block) in out.chunks_mut(chunk).enumerate() {
            let i = idx % f.count;
            let (p, w) = (f.primes[i], f.residues[i]);
            let ws = shoup_precompute(w, p);
            for v in block.iter_mut() {
                *v = mul_shoup(*v, w, ws, p);
            }
        }
        Cow::Owned(out)
    }

    pub(crate) fn to_bytes(&self) -> Vec<u8> {
        let words = self.materialized();
        let mut out = Vec::with_capacity(words.len() * 8);
        for w in words.iter() {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out
    }

    pub(crate) fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(Error::Serialization("RLWE body is not a whole number of words".into()));
        }
        let body = bytes.chunks_exact(8).map(|c| u64::from_be_bytes(c.try_into().unwrap())).collect();
        Ok(Self::from_body(body))
    }

    pub(crate) fn hash_payload<H: Hasher>(&self, h: &mut H) {
        self.materialized().hash(h);
    }
}
