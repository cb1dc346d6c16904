use rand::Rng;

use super::KaError;
use crate::rng::StreamRng;

const DYADIC_BITS: i32 = 40;

/// Rounds to a multiple of `2^-40`, so that every bucket point is exact.
pub fn dyadic(x: f64) -> f64 {
    let scale = 2f64.powi(DYADIC_BITS);
    (x * scale).round() / scale
}

/// Buckets `−1 + iγ` covering `[−1, 1 + γ]` to within `γ/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bucketing {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub count: usize,
    pub bits: usize,
}

impl Bucketing {
    /// `γ = √(αβ)`, rounded to a dyadic rational.
    pub fn new(alpha: f64, beta: f64) -> Result<Self, KaError> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(KaError::Config(format!(
                "alpha and beta must be positive, got {alpha}, {beta}"
            )));
        }
        let mut b = Self::with_gamma((alpha * beta).sqrt())?;
        b.alpha = alpha;
        b.beta = beta;
        Ok(b)
    }

    pub fn with_gamma(gamma: f64) -> Result<Self, KaError> {
        let gamma = dyadic(gamma);
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(KaError::Config(format!(
                "bucket width {gamma} is not positive"
            )));
        }
        if gamma >= 2.0 {
            return Err(KaError::Config(format!(
                "bucket width {gamma} >= 2 leaves a single bucket"
            )));
        }
        // Top point must reach 1 + γ/2.
        let count = (2.0 / gamma + 0.5).ceil() as usize + 1;
        let bits = (usize::BITS - (count - 1).leading_zeros()) as usize;
        Ok(Self {
            alpha: gamma,
            beta: gamma,
            gamma,
            count,
            bits,
        })
    }

    /// Requires `αβ ≥ 2^-n`.
    pub fn check_for(&self, n: usize) -> Result<(), KaError> {
        if (self.alpha * self.beta).log2() < -(n as f64) {
            return Err(KaError::Config(format!(
                "alpha*beta = {} is below 2^-{n}",
                self.alpha * self.beta
            )));
        }
        Ok(())
    }

    pub fn point(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.gamma
    }

    /// Nearest bucket; ties go to the lower one.
    pub fn bucketize(&self, x: f64) -> usize {
        let t = ((x + 1.0) / self.gamma).floor();
        let lo = if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(self.count - 1)
        };
        if lo + 1 < self.count && (self.point(lo + 1) - x).abs() < (self.point(lo) - x).abs() {
            lo + 1
        } else {
            lo
        }
    }

    /// `v ~ U[0, γ]`.
    pub fn offset(&self, rng: &mut StreamRng) -> f64 {
        rng.random_range(0.0..=self.gamma)
    }

    /// Uniform vector in `{0,1}^{m_b}`.
    pub fn random_vector(&self, rng: &mut StreamRng) -> u64 {
        rng.random::<u64>() & self.mask()
    }

    pub fn mask(&self) -> u64 {
        if self.bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }
}

/// `⟨s, r⟩ mod 2`.
pub fn inner_product(s: u64, r: u64) -> bool {
    (s & r).count_ones() % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn tenth_width_uses_five_bits() {
        let b = Bucketing::with_gamma(0.1).unwrap();
        assert_eq!(b.bits, 5);
        assert!(b.point(b.count - 1) >= 1.0 + b.gamma / 2.0);
        assert!(b.point(b.count - 2) < 1.0 + b.gamma / 2.0);
    }

    #[test]
    fn degenerate_width_rejected() {
        assert!(Bucketing::with_gamma(2.0).is_err());
        assert!(Bucketing::with_gamma(0.0).is_err());
        assert!(Bucketing::new(4.0, 1.0).is_err());
        assert!(Bucketing::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn bucketize_matches_linear_scan() {
        let b = Bucketing::with_gamma(0.13).unwrap();
        let mut rng = stream(5, "bucket");
        for _ in 0..20_000 {
            let x: f64 = rng.random_range(-1.0..=1.0 + b.gamma);
            let got = b.bucketize(x);
            let best = (0..b.count)
                .min_by(|&i, &j| {
                    (b.point(i) - x)
                        .abs()
                        .partial_cmp(&(b.point(j) - x).abs())
                        .unwrap()
                })
                .unwrap();
            assert_eq!(got, best, "x = {x}");
            assert!((b.point(got) - x).abs() <= b.gamma / 2.0 + 1e-15);
        }
    }

    #[test]
    fn ties_go_down() {
        let b = Bucketing::with_gamma(0.25).unwrap();
        let mid = (b.point(3) + b.point(4)) / 2.0;
        assert_eq!(b.bucketize(mid), 3);
    }

    #[test]
    fn inner_product_parity() {
        assert!(!inner_product(0b1011, 0b0100));
        assert!(!inner_product(0b1011, 0b0011));
        assert!(inner_product(0b1011, 0b0001));
        assert!(inner_product(0b111, 0b111));
    }
}
