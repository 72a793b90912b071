//! Kloosterman sums `S(m,n;c) = sum over units a mod c of e((m a + n a^-1) / c)`.
//!
//! [`kloosterman_naive`] is the term-by-term definition and serves as the
//! oracle. [`kloosterman_fast`] factors `c`, splits the sum into prime-power
//! pieces by twisted multiplicativity, evaluates odd prime powers `p^k`
//! (`k >= 2`) in closed form and runs a primitive-root loop over half of the
//! unit group for primes. Powers of two use the naive loop.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::arith::{
    gcd, gcd_signed, legendre, mod_inverse, pow_mod, reduce_signed, sqrt_mod_prime_power,
    FactoredModulus, ShoupMul, SpfTable,
};
use crate::error::{Error, Result};
use crate::reduce::PairwiseSum;

/// Default per-call cap on the modulus accepted by the naive oracle.
pub const NAIVE_ORACLE_CAP: u64 = 1_000_000;

/// One complete Kloosterman sum `S(m, n; c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct KloostermanQuery {
    pub m: i64,
    pub n: i64,
    pub c: u64,
}

impl KloostermanQuery {
    pub fn new(m: i64, n: i64, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::domain("modulus c must be at least 1"));
        }
        if m == 0 || n == 0 {
            return Err(Error::domain("m and n must be nonzero"));
        }
        Ok(Self { m, n, c })
    }
}

/// `e(r / c)` with `r` already reduced into `[0, c)`.
#[inline]
fn unit_root(r: u64, c: u64) -> Complex64 {
    let (s, co) = (TAU * (r as f64 / c as f64)).sin_cos();
    Complex64::new(co, s)
}

/// Term-by-term evaluation, summed pairwise in ascending `a`.
pub fn kloosterman_naive(q: KloostermanQuery) -> Complex64 {
    let c = q.c;
    let m = reduce_signed(q.m, c);
    let n = reduce_signed(q.n, c);
    let mut acc = PairwiseSum::new(Complex64::new(0.0, 0.0));
    for a in 0..c {
        if gcd(a, c) != 1 {
            continue;
        }
        let a_inv = mod_inverse(a, c).expect("unit");
        let r = ((m as u128 * a as u128 + n as u128 * a_inv as u128) % c as u128) as u64;
        acc.push(unit_root(r, c));
    }
    acc.finish()
}

/// The naive definition evaluated for many `(m, n)` pairs sharing one modulus.
///
/// Units, inverses and the roots of unity are tabulated once; each sum is
/// still accumulated term by term in ascending `a`, so every value is
/// bit-identical to [`kloosterman_naive`].
pub fn kloosterman_naive_many(c: u64, pairs: &[(i64, i64)]) -> Result<Vec<Complex64>> {
    if c == 0 {
        return Err(Error::domain("modulus c must be at least 1"));
    }
    if c > NAIVE_ORACLE_CAP {
        return Err(Error::ResourceLimit(format!(
            "naive oracle modulus {c} exceeds cap {NAIVE_ORACLE_CAP}"
        )));
    }
    let units: Vec<(u64, u64)> = (0..c)
        .filter(|&a| gcd(a, c) == 1)
        .map(|a| (a, mod_inverse(a, c).expect("unit")))
        .collect();
    let roots: Vec<Complex64> = (0..c).map(|r| unit_root(r, c)).collect();
    Ok(pairs
        .iter()
        .map(|&(m, n)| {
            let m = reduce_signed(m, c);
            let n = reduce_signed(n, c);
            let mut acc = PairwiseSum::new(Complex64::new(0.0, 0.0));
            for &(a, a_inv) in &units {
                acc.push(roots[((m * a + n * a_inv) % c) as usize]);
            }
            acc.finish()
        })
        .collect())
}

/// Real-valued naive loop used for the 2-adic pieces of the fast path.
fn naive_real(m: u64, n: u64, c: u64) -> f64 {
    let mut acc = 0.0;
    for a in (1..c).step_by(2).filter(|&a| gcd(a, c) == 1) {
        let a_inv = mod_inverse(a, c).expect("unit");
        let r = ((m as u128 * a as u128 + n as u128 * a_inv as u128) % c as u128) as u64;
        acc += (TAU * (r as f64 / c as f64)).cos();
    }
    if c == 1 {
        1.0
    } else {
        acc
    }
}

/// `S(m, n; p)` for an odd prime `p` and units `m`, `n`.
///
/// Writes `a = g^j` for a primitive root `g`; `a` and `-a` contribute the same
/// cosine, so only `j < (p-1)/2` is visited. Interleaved lanes keep the
/// modular multiplication chains independent.
fn prime_sum(m: u64, n: u64, p: u64, table: &SpfTable) -> Result<f64> {
    debug_assert!(p % 2 == 1 && m % p != 0 && n % p != 0);
    let g = table.primitive_root(p)?;
    let g_inv = mod_inverse(g, p)?;
    Ok(prime_sum_lanes(m % p, n % p, g, g_inv, p))
}

const LANES: usize = 8;

/// Integer lane loop with a two-level table for `e(r/p)`.
fn prime_sum_lanes(m: u64, n: u64, g: u64, g_inv: u64, p: u64) -> f64 {
    let half = (p - 1) / 2;
    // e(r/p) = e(hi * 2^b / p) * e(lo / p)
    let bits = (64 - p.leading_zeros()).div_ceil(2);
    let lo_len = 1usize << bits;
    let hi_len = (p >> bits) as usize + 1;
    let lo: Vec<(f64, f64)> = (0..lo_len as u64)
        .map(|l| (TAU * (l as f64 / p as f64)).sin_cos())
        .collect();
    let hi: Vec<(f64, f64)> = (0..hi_len as u64)
        .map(|h| (TAU * (((h << bits) % p) as f64 / p as f64)).sin_cos())
        .collect();
    let mask = (lo_len - 1) as u64;
    let cos_of = |r: u64| -> f64 {
        let (sh, ch) = hi[(r >> bits) as usize];
        let (sl, cl) = lo[(r & mask) as usize];
        ch * cl - sh * sl
    };

    let step_x = ShoupMul::new(pow_mod(g, LANES as u64, p), p);
    let step_y = ShoupMul::new(pow_mod(g_inv, LANES as u64, p), p);
    let mut xs = [0u64; LANES];
    let mut ys = [0u64; LANES];
    for l in 0..LANES {
        xs[l] = crate::arith::mul_mod(m, pow_mod(g, l as u64, p), p);
        ys[l] = crate::arith::mul_mod(n, pow_mod(g_inv, l as u64, p), p);
    }
    let mut sums = [0.0f64; LANES];
    for _ in 0..half / LANES as u64 {
        for l in 0..LANES {
            let mut r = xs[l] + ys[l];
            if r >= p {
                r -= p;
            }
            sums[l] += cos_of(r);
            xs[l] = step_x.mul(xs[l]);
            ys[l] = step_y.mul(ys[l]);
        }
    }
    for l in 0..(half % LANES as u64) as usize {
        let mut r = xs[l] + ys[l];
        if r >= p {
            r -= p;
        }
        sums[l] += cos_of(r);
    }
    2.0 * crate::reduce::pairwise_sum(0.0, sums)
}

/// `S(m, n; p^k)` for odd `p`, `k >= 2`, units `m`, `n`: zero unless `mn` is
/// a square mod `p^k`; otherwise with `y^2 = mn`,
/// `2 p^(k/2) cos(4 pi y / p^k)` for even `k`, and for odd `k`
/// `2 p^(k/2) (y/p) cos(4 pi y / p^k)` when `p = 1 mod 4`,
/// `-2 p^(k/2) (y/p) sin(4 pi y / p^k)` when `p = 3 mod 4`.
fn odd_prime_power_sum(m: u64, n: u64, p: u64, k: u32) -> f64 {
    let q = p.pow(k);
    let mn = (m as u128 * n as u128 % q as u128) as u64;
    let Some(y) = sqrt_mod_prime_power(mn, p, k) else {
        return 0.0;
    };
    let scale = 2.0 * (q as f64).sqrt();
    let phase = TAU * ((2 * y % q) as f64 / q as f64);
    if k % 2 == 0 {
        scale * phase.cos()
    } else {
        let chi = legendre(y, p) as f64;
        if p % 4 == 1 {
            scale * chi * phase.cos()
        } else {
            -scale * chi * phase.sin()
        }
    }
}

/// `S(m, n; p^k)` with `m`, `n` reduced modulo `p^k`.
fn local_sum(m: u64, n: u64, p: u64, k: u32, table: &SpfTable) -> Result<f64> {
    let q = p.pow(k);
    if p == 2 {
        return Ok(naive_real(m, n, q));
    }
    let m_div = m % p == 0;
    let n_div = n % p == 0;
    if k == 1 {
        return Ok(match (m_div, n_div) {
            (true, true) => (p - 1) as f64,
            (true, false) | (false, true) => -1.0,
            (false, false) => prime_sum(m, n, p, table)?,
        });
    }
    match (m_div, n_div) {
        // each unit mod p^(k-1) lifts to p units mod p^k
        (true, true) => Ok(p as f64 * local_sum(m / p, n / p, p, k - 1, table)?),
        (true, false) | (false, true) => Ok(0.0),
        (false, false) => Ok(odd_prime_power_sum(m, n, p, k)),
    }
}

/// `S(m, n; c)` through the factorisation of `c`, using
/// `S(m, n; c1 c2) = S(m c2^-1, n c2^-1; c1) S(m c1^-1, n c1^-1; c2)`.
pub fn kloosterman_fast(q: KloostermanQuery, table: &SpfTable) -> Result<f64> {
    let factored = table.factor(q.c)?;
    kloosterman_factored(q.m, q.n, &factored, table)
}

pub(crate) fn kloosterman_factored(
    m: i64,
    n: i64,
    factored: &FactoredModulus,
    table: &SpfTable,
) -> Result<f64> {
    let c = factored.value;
    let mut value = 1.0;
    for (&(p, k), q) in factored.factors.iter().zip(factored.prime_powers()) {
        let cofactor = c / q;
        let inv = mod_inverse(cofactor % q, q)?;
        let m_loc = (reduce_signed(m, q) as u128 * inv as u128 % q as u128) as u64;
        let n_loc = (reduce_signed(n, q) as u128 * inv as u128 % q as u128) as u64;
        value *= local_sum(m_loc, n_loc, p, k, table)?;
        if value == 0.0 {
            break;
        }
    }
    Ok(value)
}

/// `tau(c) * gcd(m, n, c)^(1/2) * c^(1/2)`, an upper bound for `|S(m, n; c)|`.
pub fn weil_majorant(q: KloostermanQuery) -> f64 {
    let tau = FactoredModulus::by_trial_division(q.c)
        .map(|f| f.divisor_count())
        .unwrap_or(1);
    let g = gcd(gcd_signed(q.m, q.n), q.c);
    tau as f64 * (g as f64).sqrt() * (q.c as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(m: i64, n: i64, c: u64) -> KloostermanQuery {
        KloostermanQuery::new(m, n, c).unwrap()
    }

    // Brute force written independently of the crate: complex exponentials
    // with the inverse found by search.
    fn brute(m: i64, n: i64, c: u64) -> f64 {
        let mut s = 0.0;
        for a in 0..c as i64 {
            let Some(ai) = (0..c as i64).find(|&b| (a * b).rem_euclid(c as i64) == 1 % c as i64)
            else {
                continue;
            };
            let x = (m * a + n * ai) as f64 / c as f64;
            s += (2.0 * std::f64::consts::PI * x).cos();
        }
        s
    }

    #[test]
    fn query_validation() {
        assert!(KloostermanQuery::new(0, 1, 3).is_err());
        assert!(KloostermanQuery::new(1, 0, 3).is_err());
        assert!(KloostermanQuery::new(1, 1, 0).is_err());
    }

    #[test]
    fn naive_examples() {
        let s = kloosterman_naive(q(1, 1, 1));
        assert!((s.re - 1.0).abs() < 1e-15 && s.im.abs() < 1e-15);
        assert!((kloosterman_naive(q(1, 1, 3)).re + 1.0).abs() < 1e-12);
        let golden = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((kloosterman_naive(q(1, 1, 5)).re - golden).abs() < 1e-12);
        assert!((kloosterman_naive(q(1, 1, 4)).re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn naive_matches_brute_force() {
        for c in 1..60 {
            for &(m, n) in &[(1, 1), (2, 3), (-4, 7), (6, 10)] {
                let s = kloosterman_naive(q(m, n, c));
                assert!((s.re - brute(m, n, c)).abs() < 1e-9, "c={c} m={m} n={n}");
            }
        }
    }

    #[test]
    fn batch_is_bit_identical() {
        let pairs = [(1, 1), (-3, 8), (12, 18)];
        for c in [1u64, 7, 36, 210] {
            let many = kloosterman_naive_many(c, &pairs).unwrap();
            for (&(m, n), v) in pairs.iter().zip(many) {
                assert_eq!(v, kloosterman_naive(q(m, n, c)));
            }
        }
    }

    #[test]
    fn fast_examples() {
        let t = SpfTable::build(100).unwrap();
        for (m, n, c) in [(1, 1, 15), (1, 1, 9), (2, 3, 7)] {
            let fast = kloosterman_fast(q(m, n, c), &t).unwrap();
            let naive = kloosterman_naive(q(m, n, c)).re;
            assert!((fast - naive).abs() < 1e-10, "({m},{n},{c}): {fast} vs {naive}");
        }
        assert!(matches!(
            kloosterman_fast(q(1, 1, 101), &t),
            Err(Error::ModulusOutOfRange { .. })
        ));
    }

    #[test]
    fn multiplicativity_identity() {
        // S(m,n;c1c2) = S(m c2^-1, n c2^-1; c1) S(m c1^-1, n c1^-1; c2)
        for c1 in 1..25u64 {
            for c2 in 1..25u64 {
                if gcd(c1, c2) != 1 {
                    continue;
                }
                for &(m, n) in &[(1i64, 1i64), (3, 5), (-2, 9)] {
                    let whole = kloosterman_naive(q(m, n, c1 * c2)).re;
                    let i2 = mod_inverse(c2 % c1, c1).unwrap() as i64;
                    let i1 = mod_inverse(c1 % c2, c2).unwrap() as i64;
                    let a = kloosterman_naive(q(m * i2.max(1), n * i2.max(1), c1)).re;
                    let b = kloosterman_naive(q(m * i1.max(1), n * i1.max(1), c2)).re;
                    assert!((whole - a * b).abs() < 1e-9, "c1={c1} c2={c2}");
                }
            }
        }
    }

    #[test]
    fn prime_power_closed_form() {
        let t = SpfTable::build(20).unwrap();
        for &(p, k) in &[(3u64, 2u32), (3, 3), (3, 4), (3, 5), (5, 2), (5, 3), (7, 2), (7, 3), (11, 2), (13, 2), (19, 2)] {
            let pk = p.pow(k);
            for m in 1..12u64 {
                for n in 1..12u64 {
                    let expect = kloosterman_naive(q(m as i64, n as i64, pk)).re;
                    let got = local_sum(m % pk, n % pk, p, k, &t).unwrap();
                    assert!((got - expect).abs() < 1e-8, "p^k={pk} m={m} n={n}: {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn prime_loop_matches_naive() {
        let t = SpfTable::build(2000).unwrap();
        for p in (3..2000u64).filter(|&p| t.is_prime(p)).step_by(7) {
            for &(m, n) in &[(1u64, 1u64), (2, 5), (p - 1, 3)] {
                if m % p == 0 || n % p == 0 {
                    continue;
                }
                let got = prime_sum(m % p, n % p, p, &t).unwrap();
                let expect = kloosterman_naive(q(m as i64, n as i64, p)).re;
                assert!((got - expect).abs() < 1e-9, "p={p}");
            }
        }
    }

    #[test]
    fn large_prime_loop() {
        let p = 1_000_003u64;
        let t = SpfTable::build(p).unwrap();
        for (m, n) in [(1u64, 1u64), (17, 999_999)] {
            let a = prime_sum(m, n, p, &t).unwrap();
            let b = kloosterman_naive(q(m as i64, n as i64, p)).re;
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn weil_examples() {
        assert!((weil_majorant(q(1, 1, 1)) - 1.0).abs() < 1e-15);
        assert!((weil_majorant(q(1, 1, 2)) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((weil_majorant(q(6, 10, 4)) - 6.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn periodicity_exact() {
        for c in [5u64, 12, 49] {
            let a = kloosterman_naive(q(3, 4, c));
            let b = kloosterman_naive(q(3 + 2 * c as i64, 4 - 3 * c as i64, c));
            assert_eq!(a, b);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn real_symmetric_and_weil(m in -50i64..50, n in -50i64..50, c in 1u64..400) {
            prop_assume!(m != 0 && n != 0);
            let s = kloosterman_naive(q(m, n, c));
            let scale = weil_majorant(q(1, 1, c));
            prop_assert!(s.im.abs() <= 1e-9 * scale);
            let t = kloosterman_naive(q(n, m, c));
            prop_assert!((s - t).norm() <= 1e-9 * scale);
            prop_assert!(s.norm() <= weil_majorant(q(m, n, c)) + 1e-6);
        }

        #[test]
        fn fast_equals_naive(m in -10_000i64..10_000, n in -10_000i64..10_000, c in 1u64..3000) {
            prop_assume!(m != 0 && n != 0);
            let t = table_3000();
            let fast = kloosterman_fast(q(m, n, c), t).unwrap();
            let naive = kloosterman_naive(q(m, n, c)).re;
            prop_assert!((fast - naive).abs() <= 1e-6 * weil_majorant(q(1, 1, c)));
        }
    }

    fn table_3000() -> &'static SpfTable {
        static T: std::sync::OnceLock<SpfTable> = std::sync::OnceLock::new();
        T.get_or_init(|| SpfTable::build(3000).unwrap())
    }
}
