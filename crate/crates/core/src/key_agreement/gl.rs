use rand::Rng;

use super::bucket::{inner_product, Bucketing};
use crate::game::Transcript;
use crate::rng::StreamRng;

/// Predicts `⟨x, r⟩` for a hidden `x`.
pub trait GlOracle {
    fn query(&mut self, r: u64, rng: &mut StreamRng) -> bool;
}

/// Always right.
#[derive(Clone, Copy, Debug)]
pub struct ExactOracle {
    pub x: u64,
}

impl GlOracle for ExactOracle {
    fn query(&mut self, r: u64, _rng: &mut StreamRng) -> bool {
        inner_product(self.x, r)
    }
}

/// Right with probability `1 - error`, independently per call.
#[derive(Clone, Copy, Debug)]
pub struct NoisyOracle {
    pub x: u64,
    pub error: f64,
}

impl GlOracle for NoisyOracle {
    fn query(&mut self, r: u64, rng: &mut StreamRng) -> bool {
        inner_product(self.x, r) ^ rng.random_bool(self.error)
    }
}

/// Recovers `bits` bits of `x` from `samples` votes per bit: the majority
/// of `A(r) ⊕ A(r ⊕ e_i)`. Ties decode to 0.
pub fn gl_decode(
    oracle: &mut dyn GlOracle,
    bits: usize,
    samples: usize,
    rng: &mut StreamRng,
) -> u64 {
    let mask = if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let mut x = 0u64;
    for i in 0..bits.min(64) {
        let mut ones = 0usize;
        for _ in 0..samples {
            let r = rng.random::<u64>() & mask;
            let a = oracle.query(r, rng);
            let b = oracle.query(r ^ (1 << i), rng);
            ones += usize::from(a ^ b);
        }
        if 2 * ones > samples {
            x |= 1 << i;
        }
    }
    x
}

/// Guesses the key bit from what an eavesdropper sees.
pub trait BitGuesser {
    fn guess(&mut self, v: f64, r: u64, transcript: &Transcript, rng: &mut StreamRng) -> bool;
}

/// Test guesser handed the first party's output out of band.
#[derive(Clone, Copy, Debug)]
pub struct CheatingGuesser {
    pub o1: f64,
    pub bucketing: Bucketing,
}

impl BitGuesser for CheatingGuesser {
    fn guess(&mut self, v: f64, r: u64, _transcript: &Transcript, _rng: &mut StreamRng) -> bool {
        inner_product(self.bucketing.bucketize(self.o1 + v) as u64, r)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FairCoin;

impl BitGuesser for FairCoin {
    fn guess(&mut self, _v: f64, _r: u64, _transcript: &Transcript, rng: &mut StreamRng) -> bool {
        rng.random_bool(0.5)
    }
}

struct GuesserOracle<'a> {
    guesser: &'a mut dyn BitGuesser,
    v: f64,
    transcript: &'a Transcript,
}

impl GlOracle for GuesserOracle<'_> {
    fn query(&mut self, r: u64, rng: &mut StreamRng) -> bool {
        self.guesser.guess(self.v, r, self.transcript, rng)
    }
}

/// What a bit guesser yields about the first party's bucket.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlAttack {
    pub v: f64,
    pub decoded: u64,
    /// `None` if the decoded string names no bucket.
    pub bucket: Option<usize>,
}

impl GlAttack {
    pub fn value(&self, bucketing: &Bucketing) -> Option<f64> {
        self.bucket.map(|i| bucketing.point(i))
    }
}

/// Draws a fresh offset, then decodes the bucket index through the guesser.
pub fn gl_attack_ka(
    transcript: &Transcript,
    guesser: &mut dyn BitGuesser,
    bucketing: &Bucketing,
    samples: usize,
    rng: &mut StreamRng,
) -> GlAttack {
    let v = bucketing.offset(rng);
    let mut oracle = GuesserOracle {
        guesser,
        v,
        transcript,
    };
    let decoded = gl_decode(&mut oracle, bucketing.bits, samples, rng);
    let bucket = usize::try_from(decoded)
        .ok()
        .filter(|&i| i < bucketing.count);
    GlAttack { v, decoded, bucket }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn exact_oracle_decodes() {
        let mut rng = stream(1, "gl");
        for x in [0u64, 1, 0b10110, 31] {
            assert_eq!(gl_decode(&mut ExactOracle { x }, 5, 9, &mut rng), x);
        }
    }

    #[test]
    fn constant_oracle_decodes_zero() {
        struct Const;
        impl GlOracle for Const {
            fn query(&mut self, _r: u64, _rng: &mut StreamRng) -> bool {
                true
            }
        }
        let mut rng = stream(2, "gl");
        assert_eq!(gl_decode(&mut Const, 6, 10, &mut rng), 0);
    }

    #[test]
    fn noisy_oracle_decodes_with_enough_votes() {
        let mut rng = stream(3, "gl");
        let ok = (0..200)
            .filter(|_| {
                let x = rng.random::<u64>() & 31;
                gl_decode(&mut NoisyOracle { x, error: 0.1 }, 5, 101, &mut rng) == x
            })
            .count();
        assert!(ok >= 198, "{ok}");
    }

    #[test]
    fn cheating_guesser_recovers_bucket() {
        let b = Bucketing::with_gamma(0.1).unwrap();
        let t = Transcript::new(1, 1, crate::game::DomainSpec::index(1), Default::default());
        let mut rng = stream(4, "gl");
        for i in 0..100 {
            let o1 = -0.9 + i as f64 * 0.018;
            let mut g = CheatingGuesser { o1, bucketing: b };
            let a = gl_attack_ka(&t, &mut g, &b, 3, &mut rng);
            assert_eq!(a.bucket, Some(b.bucketize(o1 + a.v)));
            assert!((a.value(&b).unwrap() - o1).abs() <= 2.0 * b.gamma);
        }
    }
}
