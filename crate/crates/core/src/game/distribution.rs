use std::sync::Arc;

use rand::Rng;

use super::domain::{DomainSpec, Element, SampleSet};
use super::query::{EvalError, Query};
use super::GameError;

#[derive(Clone, Debug, PartialEq)]
enum Weights {
    Uniform,
    /// Weights and their running sums; the last sum is 1.
    Explicit {
        weights: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// A distribution with explicit finite support.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteDistribution {
    domain: DomainSpec,
    support: Arc<[Element]>,
    weights: Weights,
}

/// Exact population value of a query, with the number of support points
/// whose ciphertext entry failed to decrypt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrueAnswer {
    pub value: f64,
    pub decrypt_failures: usize,
}

impl FiniteDistribution {
    pub fn uniform(
        domain: DomainSpec,
        support: impl Into<Arc<[Element]>>,
    ) -> Result<Self, GameError> {
        let support = support.into();
        Self::validate(domain, &support)?;
        Ok(Self {
            domain,
            support,
            weights: Weights::Uniform,
        })
    }

    /// Uniform over the whole index domain `0..m`.
    pub fn uniform_index(m: usize) -> Result<Self, GameError> {
        let support: Vec<Element> = (0..m as u32).map(Element::Index).collect();
        Self::uniform(DomainSpec::index(m), support)
    }

    pub fn weighted(
        domain: DomainSpec,
        support: impl Into<Arc<[Element]>>,
        weights: Vec<f64>,
    ) -> Result<Self, GameError> {
        let support = support.into();
        Self::validate(domain, &support)?;
        if weights.len() != support.len() {
            return Err(GameError::InvalidDistribution(format!(
                "{} weights for {} support points",
                weights.len(),
                support.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(GameError::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GameError::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            domain,
            support,
            weights: Weights::Explicit {
                weights,
                cumulative,
            },
        })
    }

    fn validate(domain: DomainSpec, support: &[Element]) -> Result<(), GameError> {
        if !domain.is_valid() {
            return Err(GameError::InvalidDistribution(format!(
                "degenerate domain {domain}"
            )));
        }
        if support.is_empty() {
            return Err(GameError::InvalidDistribution("empty support".into()));
        }
        if let Some(pos) = support.iter().position(|x| !domain.contains(x)) {
            return Err(GameError::InvalidDistribution(format!(
                "support element {pos} is not in domain {domain}"
            )));
        }
        Ok(())
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain
    }

    pub fn support(&self) -> &[Element] {
        &self.support
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, Weights::Uniform)
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Weights::Uniform => 1.0 / self.support.len() as f64,
            Weights::Explicit { weights, .. } => weights[i],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        let i = match &self.weights {
            Weights::Uniform => rng.random_range(0..self.support.len()),
            Weights::Explicit { cumulative, .. } => {
                let u: f64 = rng.random();
                cumulative
                    .partition_point(|&c| c <= u)
                    .min(self.support.len() - 1)
            }
        };
        self.support[i].clone()
    }

    /// `n` i.i.d. draws.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> SampleSet {
        SampleSet::new((0..n).map(|_| self.sample(rng)).collect())
    }

    /// `q(D)`, computed exactly over the support.
    pub fn true_answer(&self, q: &Query) -> Result<f64, EvalError> {
        self.true_answer_detailed(q).map(|t| t.value)
    }

    pub fn true_answer_detailed(&self, q: &Query) -> Result<TrueAnswer, EvalError> {
        if q.domain != self.domain {
            return Err(EvalError::WrongDomain(self.domain));
        }
        let mut decrypt_failures = 0;
        let mut value = 0.0;
        match &self.weights {
            Weights::Uniform => {
                for x in self.support.iter() {
                    match q.eval_checked(x)? {
                        Some(v) => value += v,
                        None => decrypt_failures += 1,
                    }
                }
                value /= self.support.len() as f64;
            }
            Weights::Explicit { weights, .. } => {
                for (x, w) in self.support.iter().zip(weights) {
                    match q.eval_checked(x)? {
                        Some(v) => value += w * v,
                        None => decrypt_failures += 1,
                    }
                }
            }
        }
        Ok(TrueAnswer {
            value,
            decrypt_failures,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn table(m: usize, v: Vec<f64>) -> Query {
        Query::table(DomainSpec::index(m), v).unwrap()
    }

    #[test]
    fn examples() {
        let d = FiniteDistribution::uniform_index(4).unwrap();
        assert_eq!(
            d.true_answer(&table(4, vec![1.0, -1.0, 1.0, -1.0]))
                .unwrap(),
            0.0
        );
        assert_eq!(
            d.true_answer(&table(4, vec![1.0, 0.0, 0.0, 0.0])).unwrap(),
            0.25
        );
        assert!(d.true_answer(&table(3, vec![0.0; 3])).is_err());
    }

    #[test]
    fn weighted_sampling_follows_weights() {
        let dom = DomainSpec::index(3);
        let support: Vec<Element> = (0..3).map(Element::Index).collect();
        let d = FiniteDistribution::weighted(dom, support, vec![0.5, 0.0, 0.5]).unwrap();
        let mut rng = stream(3, "w");
        let s = d.sample_n(20_000, &mut rng);
        let zeros = s.iter().filter(|x| x.index() == 0).count();
        assert!(s.iter().all(|x| x.index() != 1));
        assert!((zeros as f64 / 20_000.0 - 0.5).abs() < 0.02);
        assert_eq!(d.true_answer(&table(3, vec![1.0, 1.0, 0.0])).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_weights() {
        let dom = DomainSpec::index(2);
        let support = || -> Vec<Element> { vec![Element::Index(0), Element::Index(1)] };
        assert!(FiniteDistribution::weighted(dom, support(), vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::weighted(dom, support(), vec![1.5, -0.5]).is_err());
        assert!(FiniteDistribution::weighted(dom, support(), vec![1.0]).is_err());
        assert!(FiniteDistribution::uniform(dom, vec![Element::Index(2)]).is_err());
    }

    #[test]
    fn triplet_support_with_shared_mpk_bit() {
        use crate::game::domain::Triplet;
        use crate::ibe::BitString;
        let mut mpk = BitString::zeros(6);
        mpk.set(4, true);
        let mpk = std::sync::Arc::new(mpk);
        let support: Vec<Element> = (0..5)
            .map(|j| {
                Element::Triplet(Arc::new(Triplet {
                    j,
                    mpk: mpk.clone(),
                    sk: BitString::zeros(6),
                }))
            })
            .collect();
        let dom = DomainSpec::triplet(5, 6);
        let d = FiniteDistribution::uniform(dom, support).unwrap();
        assert_eq!(
            d.true_answer(&Query::bit_projection(dom, 4).unwrap())
                .unwrap(),
            1.0
        );
    }
}
