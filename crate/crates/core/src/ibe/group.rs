//! Arithmetic in the quadratic-residue subgroup of `Z_p^*` for a safe prime
//! `p = 2q + 1 < 2^64`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
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

/// Deterministic Miller–Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
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

pub fn is_safe_prime(p: u64) -> bool {
    p > 5 && p % 2 == 1 && is_prime(p) && is_prime((p - 1) / 2)
}

/// Group parameters: safe prime `p`, subgroup order `q`, generator `g = 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SafePrimeGroup {
    pub p: u64,
    pub q: u64,
    pub g: u64,
}

impl SafePrimeGroup {
    pub fn new(p: u64) -> Option<Self> {
        // 4 = 2^2 is a nontrivial residue, so it generates the order-q subgroup.
        is_safe_prime(p).then(|| Self {
            p,
            q: (p - 1) / 2,
            g: 4,
        })
    }

    /// Largest safe prime below `2^bits`, cached per width.
    pub fn largest_below_pow2(bits: u32) -> Option<Self> {
        static CACHE: OnceLock<Mutex<HashMap<u32, Option<u64>>>> = OnceLock::new();
        if !(4..=64).contains(&bits) {
            return None;
        }
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("safe-prime cache poisoned");
        let p = *guard.entry(bits).or_insert_with(|| {
            let top = if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
            // p ≡ 11 (mod 12) for every safe prime above 7
            let mut cand = top - (top - 11) % 12;
            while cand > 11 {
                if is_safe_prime(cand) {
                    return Some(cand);
                }
                cand -= 12;
            }
            None
        });
        p.and_then(Self::new)
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }

    /// Membership in the order-`q` subgroup.
    pub fn contains(&self, x: u64) -> bool {
        x > 1 && x < self.p && self.pow(x, self.q) == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small_cases() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(18446744073709551557)); // largest 64-bit prime
        assert!(!is_prime(3215031751)); // strong pseudoprime to bases 2,3,5,7
    }

    #[test]
    fn safe_primes_per_width() {
        for bits in [8u32, 16, 32, 63, 64] {
            let g = SafePrimeGroup::largest_below_pow2(bits).unwrap();
            assert!(g.p < (1u128 << bits) as u64 || bits == 64);
            assert!(is_safe_prime(g.p));
            assert!(g.contains(g.g));
            assert_eq!(g.pow(g.g, g.q), 1);
        }
        assert_eq!(SafePrimeGroup::largest_below_pow2(8).unwrap().p, 227);
    }
}
