//! Negacyclic number-theoretic transform over word-sized primes.
//!
//! Forward transform is Cooley-Tukey with the `psi` twists merged into the
//! twiddles (natural order in, bit-reversed out); the inverse is the matching
//! Gentleman-Sande pass. Multiplications by fixed operands use Shoup's
//! precomputed quotient trick.

/// Primes must stay below this bound so that lazy sums never overflow.
pub const MAX_PRIME_BITS: u32 = 62;

#[inline]
pub fn shoup_precompute(w: u64, p: u64) -> u64 {
    (((w as u128) << 64) / p as u128) as u64
}

/// `a * w mod p` with `w_shoup = shoup_precompute(w, p)`.
#[inline]
pub fn mul_shoup(a: u64, w: u64, w_shoup: u64, p: u64) -> u64 {
    let q = ((a as u128 * w_shoup as u128) >> 64) as u64;
    let r = a.wrapping_mul(w).wrapping_sub(q.wrapping_mul(p));
    r.min(r.wrapping_sub(p))
}

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    s.min(s.wrapping_sub(p))
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    let d = a.wrapping_sub(b);
    d.min(d.wrapping_add(p))
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Largest primes below `2^bits` congruent to 1 mod `2n`, skipping `exclude`.
pub fn find_ntt_prime(bits: u32, n: usize, exclude: &[u64]) -> Option<u64> {
    assert!((2..=MAX_PRIME_BITS).contains(&bits));
    let step = 2 * n as u64;
    let top = 1u64 << bits;
    let mut cand = (top - 1) / step * step + 1;
    while cand > step && cand >= 1u64 << (bits - 1) {
        if !exclude.contains(&cand) && is_prime_u64(cand) {
            return Some(cand);
        }
        cand -= step;
    }
    None
}

fn bit_reverse(x: usize, log_n: u32) -> usize {
    x.reverse_bits() >> (usize::BITS - log_n)
}

#[derive(Clone, Debug)]
pub struct NttPlan {
    p: u64,
    n: usize,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    ipsi_rev: Vec<u64>,
    ipsi_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

impl NttPlan {
    pub fn new(p: u64, n: usize) -> Option<Self> {
        if !n.is_power_of_two() || n < 2 || !(p - 1).is_multiple_of(2 * n as u64) {
            return None;
        }
        let psi = primitive_root_2n(p, n)?;
        let log_n = n.trailing_zeros();
        let psi_inv = inv_mod(psi, p);
        let mut psi_rev = vec![0u64; n];
        let mut ipsi_rev = vec![0u64; n];
        let (mut pw, mut ipw) = (1u64, 1u64);
        for i in 0..n {
            let j = bit_reverse(i, log_n);
            psi_rev[j] = pw;
            ipsi_rev[j] = ipw;
            pw = mul_mod(pw, psi, p);
            ipw = mul_mod(ipw, psi_inv, p);
        }
        let psi_rev_shoup = psi_rev.iter().map(|&w| shoup_precompute(w, p)).collect();
        let ipsi_rev_shoup = ipsi_rev.iter().map(|&w| shoup_precompute(w, p)).collect();
        let n_inv = inv_mod(n as u64 % p, p);
        Some(NttPlan {
            p,
            n,
            psi_rev,
            psi_rev_shoup,
            ipsi_rev,
            ipsi_rev_shoup,
            n_inv,
            n_inv_shoup: shoup_precompute(n_inv, p),
        })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let p = self.p;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let w = self.psi_rev[m + i];
                let ws = self.psi_rev_shoup[m + i];
                let j1 = 2 * i * t;
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = mul_shoup(*y, w, ws, p);
                    *x = add_mod(u, v, p);
                    *y = sub_mod(u, v, p);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let p = self.p;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let w = self.ipsi_rev[h + i];
                let ws = self.ipsi_rev_shoup[h + i];
                let j1 = 2 * i * t;
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = add_mod(u, v, p);
                    *y = mul_shoup(sub_mod(u, v, p), w, ws, p);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = mul_shoup(*x, self.n_inv, self.n_inv_shoup, p);
        }
    }
}

fn primitive_root_2n(p: u64, n: usize) -> Option<u64> {
    let exp = (p - 1) / (2 * n as u64);
    (2..1000u64).map(|g| pow_mod(g, exp, p)).find(|&psi| pow_mod(psi, n as u64, p) == p - 1)
}
