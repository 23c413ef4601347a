//! Paillier with `g = n + 1` and CRT decryption.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierPublicKey {
    n: BigUint,
    n2: BigUint,
    half: BigUint,
}

#[derive(Clone, Debug)]
pub struct PaillierSecretKey {
    public: PaillierPublicKey,
    p: BigUint,
    q: BigUint,
    p2: BigUint,
    q2: BigUint,
    p_minus_1: BigUint,
    q_minus_1: BigUint,
    hp: BigUint,
    hq: BigUint,
    p_inv_q: BigUint,
}

impl PaillierPublicKey {
    pub fn new(n: BigUint) -> Result<Self> {
        if n < BigUint::from(6u8) {
            return Err(Error::InvalidParams(format!("Paillier modulus {n} too small")));
        }
        let n2 = &n * &n;
        let half = (&n - 1u32) >> 1;
        Ok(PaillierPublicKey { n, n2, half })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn modulus_squared(&self) -> &BigUint {
        &self.n2
    }

    /// Largest magnitude of a signed message.
    pub fn half_modulus(&self) -> &BigUint {
        &self.half
    }

    fn residue(&self, m: &BigInt) -> Result<BigUint> {
        if m.magnitude() > &self.half {
            return Err(Error::MessageOutOfRange(format!("|{m}| exceeds (n-1)/2 = {}", self.half)));
        }
        Ok(match m.sign() {
            Sign::Minus => &self.n - m.magnitude(),
            _ => m.magnitude().clone(),
        })
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, m: &BigInt, rng: &mut R) -> Result<BigUint> {
        let m = self.residue(m)?;
        let rho = loop {
            let cand = random_below(&self.n, rng);
            if !cand.is_zero() && cand.gcd(&self.n).is_one() {
                break cand;
            }
        };
        Ok(self.encrypt_residue(&m, &rho))
    }

    /// `(1 + m n) * rho^n mod n^2` for a caller-chosen `rho`.
    pub fn encrypt_with_randomness(&self, m: &BigInt, rho: &BigUint) -> Result<BigUint> {
        let m = self.residue(m)?;
        if rho.is_zero() || !rho.gcd(&self.n).is_one() {
            return Err(Error::InvalidParams(format!("randomness {rho} is not a unit mod n")));
        }
        Ok(self.encrypt_residue(&m, rho))
    }

    fn encrypt_residue(&self, m: &BigUint, rho: &BigUint) -> BigUint {
        // g^m = (1 + n)^m = 1 + m n (mod n^2)
        let gm = (BigUint::one() + m * &self.n) % &self.n2;
        gm * rho.modpow(&self.n, &self.n2) % &self.n2
    }

    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b % &self.n2
    }

    pub fn negate(&self, a: &BigUint) -> Result<BigUint> {
        a.modinv(&self.n2).ok_or_else(|| Error::InvalidCiphertext("ciphertext is not a unit mod n^2".into()))
    }

    pub fn sub(&self, a: &BigUint, b: &BigUint) -> Result<BigUint> {
        Ok(self.add(a, &self.negate(b)?))
    }

    pub fn mul_const(&self, a: &BigUint, k: &BigUint) -> BigUint {
        a.modpow(k, &self.n2)
    }

    fn validate(&self, c: &BigUint) -> Result<()> {
        if c.is_zero() || c >= &self.n2 || !c.gcd(&self.n).is_one() {
            return Err(Error::InvalidCiphertext("Paillier payload is not a unit below n^2".into()));
        }
        Ok(())
    }
}

impl PaillierSecretKey {
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<Self> {
        if p == q {
            return Err(Error::InvalidParams("Paillier primes must differ".into()));
        }
        let public = PaillierPublicKey::new(&p * &q)?;
        let p_minus_1 = &p - 1u32;
        let q_minus_1 = &q - 1u32;
        if !public.n.gcd(&(&p_minus_1 * &q_minus_1)).is_one() {
            return Err(Error::InvalidParams("gcd(n, phi(n)) != 1".into()));
        }
        let p2 = &p * &p;
        let q2 = &q * &q;
        let g = &public.n + 1u32;
        let hp = l_function(&g.modpow(&p_minus_1, &p2), &p)
            .modinv(&p)
            .ok_or_else(|| Error::InvalidParams("h_p not invertible".into()))?;
        let hq = l_function(&g.modpow(&q_minus_1, &q2), &q)
            .modinv(&q)
            .ok_or_else(|| Error::InvalidParams("h_q not invertible".into()))?;
        let p_inv_q = p.modinv(&q).ok_or_else(|| Error::InvalidParams("p not invertible mod q".into()))?;
        Ok(PaillierSecretKey { public, p, q, p2, q2, p_minus_1, q_minus_1, hp, hq, p_inv_q })
    }

    pub fn public(&self) -> &PaillierPublicKey {
        &self.public
    }

    pub fn primes(&self) -> (&BigUint, &BigUint) {
        (&self.p, &self.q)
    }

    /// Residue in `[0, n)`.
    pub fn decrypt_residue(&self, c: &BigUint) -> Result<BigUint> {
        self.public.validate(c)?;
        let mp = l_function(&(c % &self.p2).modpow(&self.p_minus_1, &self.p2), &self.p) * &self.hp % &self.p;
        let mq = l_function(&(c % &self.q2).modpow(&self.q_minus_1, &self.q2), &self.q) * &self.hq % &self.q;
        // m = mp + p * ((mq - mp) * p^-1 mod q)
        let diff = (&mq + &self.q - (&mp % &self.q)) % &self.q;
        Ok(mp + &self.p * (diff * &self.p_inv_q % &self.q))
    }

    /// Signed message: residues above `n/2` are negative.
    pub fn decrypt(&self, c: &BigUint) -> Result<BigInt> {
        let m = self.decrypt_residue(c)?;
        Ok(if m > self.public.half { BigInt::from(m) - BigInt::from(self.public.n.clone()) } else { BigInt::from(m) })
    }
}

fn l_function(x: &BigUint, d: &BigUint) -> BigUint {
    (x - 1u32) / d
}

fn random_bits<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.random()).collect();
    let excess = words as u64 * 32 - bits;
    if excess > 0 {
        if let Some(top) = digits.last_mut() {
            *top >>= excess;
        }
    }
    BigUint::new(digits)
}

pub(crate) fn random_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits();
    loop {
        let cand = random_bits(bits, rng);
        if &cand < bound {
            return cand;
        }
    }
}

const SMALL_PRIMES: [u32; 24] =
    [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

/// Miller-Rabin with `rounds` random bases after trial division.
pub fn is_probable_prime<R: Rng + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    let two = BigUint::from(2u8);
    if n < &two {
        return false;
    }
    if n == &two {
        return true;
    }
    if n.is_even() {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let span = n - 3u32;
    'witness: for _ in 0..rounds {
        let a = random_below(&span, rng) + 2u32;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = &x * &x % n;
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_prime<R: Rng + ?Sized>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut cand = random_bits(bits, rng);
        cand.set_bit(bits - 1, true);
        cand.set_bit(0, true);
        if is_probable_prime(&cand, 40, rng) {
            return cand;
        }
    }
}

/// Two distinct primes whose product has exactly `modulus_bits` bits.
pub fn keygen<R: Rng + ?Sized>(modulus_bits: u32, rng: &mut R) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    if modulus_bits < 6 {
        return Err(Error::InvalidParams(format!("{modulus_bits}-bit Paillier modulus is too small")));
    }
    let p_bits = u64::from(modulus_bits).div_ceil(2);
    let q_bits = u64::from(modulus_bits) / 2;
    for _ in 0..10_000 {
        let p = random_prime(p_bits, rng);
        let q = random_prime(q_bits, rng);
        if p == q || (&p * &q).bits() != u64::from(modulus_bits) {
            continue;
        }
        let Ok(sk) = PaillierSecretKey::from_primes(p, q) else { continue };
        return Ok((sk.public.clone(), sk));
    }
    Err(Error::InvalidParams(format!("could not find a {modulus_bits}-bit Paillier modulus")))
}
