//! Primality certification and big-integer helpers.
//!
//! Inputs below 2^64 use Miller-Rabin with the deterministic witness set
//! {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}; larger inputs use 64 rounds
//! with bases drawn from a ChaCha stream seeded by the candidate itself, so
//! the verdict for a given number never changes between runs.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::exec::Exec;

const WITNESSES_64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const BIG_ROUNDS: usize = 64;

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = p as u64;
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES_64 {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn is_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut rng = ChaCha8Rng::from_seed(Sha256::digest(n.to_bytes_le()).into());
    'round: for _ in 0..BIG_ROUNDS {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'round;
            }
        }
        return false;
    }
    true
}

/// Natural log of a big integer to about 1e-15 relative error, from the top
/// 64 bits and the bit length.
pub fn log_big(n: &BigUint) -> f64 {
    assert!(!n.is_zero(), "log of zero");
    let bits = n.bits();
    if bits <= 64 {
        return (n.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap();
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Smallest integer strictly greater than `exp(x)` (up to the rounding of the
/// 53-bit mantissa), for any `x >= 0`.
pub fn ceil_exp(x: f64) -> BigUint {
    assert!(x.is_finite() && x >= 0.0);
    let log2 = x / std::f64::consts::LN_2;
    if log2 < 60.0 {
        return BigUint::from(x.exp().floor() as u64 + 1);
    }
    let k = log2.floor();
    let frac = log2 - k;
    // 2^frac in [1, 2), scaled to a 53-bit integer
    let mant = (frac.exp2() * (1u64 << 52) as f64) as u64;
    let shift = k as u64 - 52;
    (BigUint::from(mant) << shift) + BigUint::one()
}

/// First prime `p >= start` with `p == 1 (mod 4)` and `p < stop`.
///
/// Candidates are tested in batches (in parallel when enabled); the smallest
/// qualifying candidate is returned regardless of completion order.
pub fn next_prime_1_mod_4(start: &BigUint, stop: Option<&BigUint>, exec: Exec) -> Option<BigUint> {
    const BATCH: usize = 64;
    let four = BigUint::from(4u32);
    let r = start % &four;
    let mut first = start.clone();
    if r.is_zero() {
        first += BigUint::one();
    } else if r > BigUint::one() {
        first += &four - r + BigUint::one();
    }
    loop {
        let batch: Vec<BigUint> = (0..BATCH)
            .map(|i| &first + &four * BigUint::from(i))
            .collect();
        if let Some(stop) = stop {
            if batch[0] >= *stop {
                return None;
            }
        }
        let verdicts = exec.map_slice(&batch, is_prime);
        if let Some(pos) = verdicts.iter().position(|&v| v) {
            let p = batch[pos].clone();
            return match stop {
                Some(s) if p >= *s => None,
                _ => Some(p),
            };
        }
        first += &four * BigUint::from(BATCH);
    }
}

pub fn next_prime_1_mod_4_u64(start: u64) -> u64 {
    let mut n = start + (4 + 1 - start % 4) % 4;
    while !is_prime_u64(n) {
        n += 4;
    }
    n
}

/// Prime factorisation by trial division, as `(p, k)` pairs in ascending order.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factor_u64(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Multiplicative order of `a` modulo `m` (requires gcd(a, m) = 1).
pub fn mult_order(a: u64, m: u64) -> u64 {
    let phi = euler_phi(m);
    let mut ord = phi;
    for (p, _) in factor_u64(phi) {
        while ord % p == 0 && pow_mod(a, ord / p, m) == 1 {
            ord /= p;
        }
    }
    ord
}

/// Smallest primitive root modulo `p^k` for odd prime `p`.
pub fn primitive_root_prime_power(p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    let phi = euler_phi(m);
    (2..m)
        .find(|&g| g % p != 0 && mult_order(g, m) == phi)
        .expect("odd prime powers have primitive roots")
}

/// Kronecker symbol `(d / n)` for `n >= 1`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return if d.abs() == 1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n = n;
    let tz = n.trailing_zeros();
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        // (d/2) = 1 if d = +-1 mod 8, -1 if d = +-3 mod 8
        let r = d.rem_euclid(8);
        if tz % 2 == 1 && (r == 3 || r == 5) {
            result = -result;
        }
        n >>= tz;
    }
    // Jacobi symbol (d mod n / n) for odd n
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = m % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 {
        result
    } else {
        0
    }
}

/// Whether `d` is a fundamental discriminant.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let squarefree = |n: u64| factor_u64(n).iter().all(|&(_, k)| k == 1);
    match d.rem_euclid(4) {
        1 => squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            let r = m.rem_euclid(4);
            (r == 2 || r == 3) && squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_is_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime_u64(n), brute_is_prime(n), "n = {n}");
        }
        // strong pseudoprimes to several small bases
        for n in [3215031751u64, 2152302898747, 3474749660383, 341550071728321] {
            assert!(!is_prime_u64(n));
        }
        assert!(is_prime_u64(18446744073709551557)); // largest 64-bit prime
    }

    #[test]
    fn big_primality() {
        // 2^127 - 1 is prime, 2^128 + 1 is not
        let m127 = (BigUint::one() << 127u32) - BigUint::one();
        assert!(is_prime(&m127));
        let f7 = (BigUint::one() << 128u32) + BigUint::one();
        assert!(!is_prime(&f7));
        // product of two 64-bit primes
        let p = BigUint::from(18446744073709551557u64);
        let q = BigUint::from(18446744073709551533u64);
        assert!(!is_prime(&(&p * &q)));
    }

    #[test]
    fn logs_and_exps() {
        let n = BigUint::from(1u32) << 200u32;
        assert!((log_big(&n) - 200.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let x = BigUint::from(12345678901234567u64) * BigUint::from(98765432109876543u64);
        let expect = (12345678901234567f64).ln() + (98765432109876543f64).ln();
        assert!((log_big(&x) - expect).abs() / expect < 1e-14);
        for x in [0.5f64, 10.0] {
            let c = ceil_exp(x).to_u64().unwrap() as f64;
            assert!(c - 1.0 <= x.exp() && x.exp() < c);
        }
        for x in [45.0, 100.0, 700.0, 2000.0] {
            let c = ceil_exp(x);
            assert!((log_big(&c) - x).abs() < 1e-12 * x.max(1.0), "x = {x}");
            assert!(log_big(&c) >= x - 1e-13 * x);
        }
    }

    #[test]
    fn progression_search() {
        assert_eq!(next_prime_1_mod_4_u64(6), 13);
        assert_eq!(next_prime_1_mod_4_u64(13), 13);
        let p = next_prime_1_mod_4(&BigUint::from(66u32), None, Exec::Sequential).unwrap();
        assert_eq!(p, BigUint::from(73u32));
        let none = next_prime_1_mod_4(
            &BigUint::from(90u32),
            Some(&BigUint::from(97u32)),
            Exec::Parallel,
        );
        assert!(none.is_none());
        let big = next_prime_1_mod_4(&ceil_exp(150.0), None, Exec::Parallel).unwrap();
        assert_eq!(&big % 4u32, BigUint::one());
        assert!(is_prime(&big));
    }

    #[test]
    fn number_theory_helpers() {
        assert_eq!(factor_u64(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(euler_phi(60), 16);
        assert_eq!(primitive_root_prime_power(5, 1), 2);
        assert_eq!(primitive_root_prime_power(9, 1), 2);
        assert_eq!(primitive_root_prime_power(7, 2), 3);
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(8, 7), 1);
        assert_eq!(kronecker(12, 5), -1);
        assert_eq!(kronecker(12, 2), 0);
        for d in [-4, 5, 8, -8, 12, -3, 13, 65] {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
        for d in [-12, 9, 4, 20, 1, 0] {
            assert!(!is_fundamental_discriminant(d), "{d}");
        }
    }
}
