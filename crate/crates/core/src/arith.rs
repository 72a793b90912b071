//! Integer arithmetic: gcd, modular inverses, smallest-prime-factor tables
//! and the handful of modular routines the Kloosterman evaluators need.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest sieve limit accepted by [`SpfTable::build`] (4 bytes per entry).
pub const DEFAULT_SPF_CAP: u64 = 200_000_000;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// gcd of |a| and |b| for signed inputs.
pub fn gcd_signed(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

/// Residue of a signed integer in `[0, c)`.
#[inline]
pub fn reduce_signed(a: i64, c: u64) -> u64 {
    (a as i128).rem_euclid(c as i128) as u64
}

/// The inverse of `a` modulo `c`, in `[0, c)`. For `c = 1` the result is 0.
pub fn mod_inverse(a: u64, c: u64) -> Result<u64> {
    if c == 0 {
        return Err(Error::domain("modulus must be at least 1"));
    }
    if c == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = ((a % c) as i128, c as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(Error::NotInvertible { a, c });
    }
    Ok(old_s.rem_euclid(c as i128) as u64)
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Multiplication by a fixed residue modulo a fixed odd modulus below 2^31,
/// using a precomputed quotient approximation (Shoup's trick).
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShoupMul {
    w: u64,
    w_shoup: u64,
    p: u64,
}

impl ShoupMul {
    pub(crate) fn new(w: u64, p: u64) -> Self {
        debug_assert!(p < (1 << 31) && w < p);
        Self {
            w,
            w_shoup: (w << 32) / p,
            p,
        }
    }

    /// `x * w mod p` for `x < p`.
    #[inline(always)]
    pub(crate) fn mul(&self, x: u64) -> u64 {
        let q = (x * self.w_shoup) >> 32;
        let r = x * self.w - q * self.p;
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }
}

/// A modulus with its prime factorisation, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredModulus {
    pub factors: Vec<(u64, u32)>,
    pub value: u64,
}

impl FactoredModulus {
    /// Factorisation by trial division; adequate for the sizes used here.
    pub fn by_trial_division(value: u64) -> Result<Self> {
        if value == 0 {
            return Err(Error::domain("cannot factor 0"));
        }
        let mut factors = Vec::new();
        let mut n = value;
        let mut p = 2u64;
        while p * p <= n {
            if n % p == 0 {
                let mut k = 0;
                while n % p == 0 {
                    n /= p;
                    k += 1;
                }
                factors.push((p, k));
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if n > 1 {
            factors.push((n, 1));
        }
        Ok(Self { factors, value })
    }

    /// Number of divisors.
    pub fn divisor_count(&self) -> u64 {
        self.factors.iter().map(|&(_, k)| k as u64 + 1).product()
    }

    /// The prime powers `p^k` exactly dividing the modulus.
    pub fn prime_powers(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, k)| p.pow(k))
    }
}

/// Smallest-prime-factor table: `spf[i]` is the least prime dividing `i`.
///
/// Immutable after construction apart from a lazily filled cache of
/// primitive roots, so it can be shared freely between threads.
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
    // primitive root of odd prime p stored at index p / 2; 0 = not yet known
    roots: OnceLock<Vec<AtomicU32>>,
}

impl std::fmt::Debug for SpfTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpfTable").field("limit", &self.limit).finish()
    }
}

impl SpfTable {
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_cap(limit, DEFAULT_SPF_CAP)
    }

    pub fn build_with_cap(limit: u64, cap: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::domain(format!("sieve limit must be at least 2, got {limit}")));
        }
        if limit > cap || limit >= u32::MAX as u64 {
            return Err(Error::ResourceLimit(format!(
                "sieve limit {limit} exceeds the configured cap {cap}"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] != 0 {
                continue;
            }
            spf[i] = i as u32;
            let mut j = (i as u64) * (i as u64);
            while j <= limit {
                let slot = &mut spf[j as usize];
                if *slot == 0 {
                    *slot = i as u32;
                }
                j += i as u64;
            }
        }
        Ok(Self {
            limit,
            spf,
            roots: OnceLock::new(),
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `i` for `2 <= i <= limit`.
    #[inline]
    pub fn spf(&self, i: u64) -> u64 {
        self.spf[i as usize] as u64
    }

    pub fn is_prime(&self, i: u64) -> bool {
        i >= 2 && i <= self.limit && self.spf(i) == i
    }

    fn check(&self, n: u64) -> Result<()> {
        if n > self.limit {
            return Err(Error::ModulusOutOfRange {
                c: n,
                limit: self.limit,
            });
        }
        Ok(())
    }

    pub fn factor(&self, n: u64) -> Result<FactoredModulus> {
        if n == 0 {
            return Err(Error::domain("cannot factor 0"));
        }
        self.check(n)?;
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut rest = n;
        while rest > 1 {
            let p = self.spf(rest);
            let mut k = 0;
            while rest % p == 0 {
                rest /= p;
                k += 1;
            }
            factors.push((p, k));
        }
        Ok(FactoredModulus { factors, value: n })
    }

    pub fn divisor_count(&self, n: u64) -> Result<u64> {
        Ok(self.factor(n)?.divisor_count())
    }

    /// Least primitive root modulo a prime `p <= limit`.
    pub fn primitive_root(&self, p: u64) -> Result<u64> {
        if p > 2 && self.is_prime(p) {
            let cache = self
                .roots
                .get_or_init(|| (0..=self.limit / 2).map(|_| AtomicU32::new(0)).collect());
            let slot = &cache[(p / 2) as usize];
            let known = slot.load(Ordering::Relaxed);
            if known != 0 {
                return Ok(known as u64);
            }
            let g = self.find_primitive_root(p)?;
            slot.store(g as u32, Ordering::Relaxed);
            return Ok(g);
        }
        self.find_primitive_root(p)
    }

    fn find_primitive_root(&self, p: u64) -> Result<u64> {
        if !self.is_prime(p) {
            return Err(Error::domain(format!("{p} is not a prime within the table")));
        }
        if p == 2 {
            return Ok(1);
        }
        let order = p - 1;
        let primes: Vec<u64> = self.factor(order)?.factors.iter().map(|&(q, _)| q).collect();
        (2..p)
            .find(|&g| primes.iter().all(|&q| pow_mod(g, order / q, p) != 1))
            .ok_or_else(|| Error::domain(format!("no primitive root found for {p}")))
    }
}

/// Legendre symbol `(a / p)` for an odd prime `p`.
pub fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// A square root of the quadratic residue `a` modulo an odd prime (Tonelli–Shanks).
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let z = (2..p).find(|&z| legendre(z, p) == -1)?;
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// A square root of a unit `a` modulo `p^k` (odd `p`), by Hensel lifting.
pub fn sqrt_mod_prime_power(a: u64, p: u64, k: u32) -> Option<u64> {
    let mut y = sqrt_mod_prime(a, p)?;
    if y == 0 {
        return None;
    }
    let mut modulus = p;
    for _ in 1..k {
        modulus *= p;
        // y <- y - (y^2 - a) / (2y)
        let f = (mul_mod(y, y, modulus) + modulus - a % modulus) % modulus;
        let inv = mod_inverse(2 * y % modulus, modulus).ok()?;
        y = (y + modulus - mul_mod(f, inv, modulus)) % modulus;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(1, 2).unwrap(), 1);
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert!(matches!(mod_inverse(2, 4), Err(Error::NotInvertible { a: 2, c: 4 })));
        assert_eq!(mod_inverse(5, 1).unwrap(), 0);
    }

    #[test]
    fn mod_inverse_exhaustive_small() {
        for c in 1..200u64 {
            for a in 0..c {
                match mod_inverse(a, c) {
                    Ok(inv) => {
                        assert!(inv < c);
                        assert_eq!(mul_mod(a, inv, c), 1 % c);
                    }
                    Err(_) => assert!(gcd(a, c) > 1),
                }
            }
        }
    }

    #[test]
    fn spf_examples() {
        let t = SpfTable::build(10).unwrap();
        assert_eq!(t.spf(9), 3);
        assert_eq!(t.spf(7), 7);
        assert_eq!(t.spf(10), 2);
    }

    #[test]
    fn spf_invariants() {
        let t = SpfTable::build(5000).unwrap();
        for i in 2..=5000u64 {
            let p = t.spf(i);
            assert_eq!(i % p, 0);
            let trial = FactoredModulus::by_trial_division(i).unwrap();
            assert_eq!(trial.factors[0].0, p);
            assert_eq!(t.factor(i).unwrap(), trial);
        }
    }

    #[test]
    fn spf_errors() {
        assert!(matches!(
            SpfTable::build_with_cap(1000, 100),
            Err(Error::ResourceLimit(_))
        ));
        let t = SpfTable::build(100).unwrap();
        assert!(matches!(t.factor(101), Err(Error::ModulusOutOfRange { .. })));
    }

    #[test]
    fn divisor_counts() {
        let t = SpfTable::build(100).unwrap();
        assert_eq!(t.divisor_count(1).unwrap(), 1);
        assert_eq!(t.divisor_count(12).unwrap(), 6);
        assert_eq!(t.divisor_count(97).unwrap(), 2);
    }

    #[test]
    fn primitive_roots_generate() {
        let t = SpfTable::build(2000).unwrap();
        for p in (3..2000).filter(|&p| t.is_prime(p)) {
            let g = t.primitive_root(p).unwrap();
            let mut x = 1;
            for k in 1..p - 1 {
                x = mul_mod(x, g, p);
                assert_ne!(x, 1, "g={g} has order {k} mod {p}");
            }
        }
    }

    #[test]
    fn shoup_matches_mul_mod() {
        for &p in &[3u64, 5, 97, 65_537, 1_000_003, 2_147_483_629] {
            for &w in &[1u64, 2, p / 3, p - 1] {
                let s = ShoupMul::new(w, p);
                for x in [0, 1, 2, p / 2, p - 1] {
                    assert_eq!(s.mul(x), mul_mod(x, w, p));
                }
            }
        }
    }

    #[test]
    fn square_roots_lift() {
        for &(p, k) in &[(3u64, 5u32), (5, 4), (7, 3), (13, 3), (17, 2)] {
            let q = p.pow(k);
            for a in 1..q.min(400) {
                if a % p == 0 {
                    continue;
                }
                match sqrt_mod_prime_power(a, p, k) {
                    Some(y) => assert_eq!(mul_mod(y, y, q), a),
                    None => assert_eq!(legendre(a, p), -1),
                }
            }
        }
    }
}
