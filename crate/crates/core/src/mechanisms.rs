//! Mechanisms: empirical mean, Gaussian noise, a true-mean test oracle and
//! the adapter that restricts a mechanism to the query's values on its
//! sample.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};

use crate::game::{EvalError, FiniteDistribution, GameError, Mechanism, Query, SampleSet};
use crate::rng::StreamRng;

/// `q(S)`, the mean of `q` over the sample.
pub fn empirical_answer(samples: &SampleSet, query: &Query) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    for x in samples.iter() {
        sum += query.eval(x)?;
    }
    Ok(sum / samples.len() as f64)
}

/// `q(S) + N(0, σ²)`, returned as `(clipped, raw)`.
pub fn gaussian_answer(
    samples: &SampleSet,
    query: &Query,
    sigma: f64,
    rng: &mut StreamRng,
) -> Result<(f64, f64), EvalError> {
    let raw = empirical_answer(samples, query)? + gaussian_noise(sigma, rng);
    Ok((raw.clamp(-1.0, 1.0), raw))
}

fn gaussian_noise(sigma: f64, rng: &mut StreamRng) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma)
            .expect("finite positive sigma")
            .sample(rng)
    } else {
        0.0
    }
}

/// `√ℓ · ln(n) / n`.
pub fn default_sigma(n: usize, ell: usize) -> f64 {
    (ell as f64).sqrt() * (n as f64).ln() / n as f64
}

/// Per-round noise levels. Rounds past the end of `per_round` reuse the
/// last entry.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    per_round: Vec<f64>,
}

impl NoiseSchedule {
    pub fn constant(sigma: f64) -> Self {
        assert!(
            sigma >= 0.0 && sigma.is_finite(),
            "sigma must be finite and non-negative"
        );
        Self {
            per_round: vec![sigma],
        }
    }

    pub fn per_round(sigmas: Vec<f64>) -> Self {
        assert!(!sigmas.is_empty(), "empty noise schedule");
        assert!(
            sigmas.iter().all(|s| *s >= 0.0 && s.is_finite()),
            "sigma must be finite and non-negative"
        );
        Self { per_round: sigmas }
    }

    pub fn sigma(&self, round: usize) -> f64 {
        *self
            .per_round
            .get(round)
            .unwrap_or_else(|| self.per_round.last().expect("non-empty"))
    }
}

#[derive(Debug, Default)]
pub struct EmpiricalMean {
    samples: SampleSet,
}

impl EmpiricalMean {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Mechanism for EmpiricalMean {
    fn name(&self) -> String {
        "empirical".into()
    }

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        _rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        self.samples = samples.clone();
        Ok(())
    }

    fn answer(&mut self, query: &Query, _rng: &mut StreamRng) -> Result<f64, GameError> {
        Ok(empirical_answer(&self.samples, query)?)
    }
}

/// Empirical mean plus independent Gaussian noise each round.
#[derive(Debug)]
pub struct GaussianMechanism {
    schedule: NoiseSchedule,
    samples: SampleSet,
    round: usize,
    /// Unclipped answers, for diagnostics.
    pub pre_clip: Vec<f64>,
}

impl GaussianMechanism {
    pub fn new(schedule: NoiseSchedule) -> Self {
        Self {
            schedule,
            samples: SampleSet::default(),
            round: 0,
            pre_clip: Vec::new(),
        }
    }
}

impl Mechanism for GaussianMechanism {
    fn name(&self) -> String {
        format!("gaussian(sigma={})", self.schedule.sigma(0))
    }

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        _rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        self.samples = samples.clone();
        Ok(())
    }

    fn answer(&mut self, query: &Query, rng: &mut StreamRng) -> Result<f64, GameError> {
        let sigma = self.schedule.sigma(self.round);
        self.round += 1;
        let (y, raw) = gaussian_answer(&self.samples, query, sigma, rng)?;
        self.pre_clip.push(raw);
        Ok(y)
    }
}

/// Answers `q(D)` exactly. The referee must be told to hand it `D`.
#[derive(Debug, Default)]
pub struct TrueMeanOracle {
    dist: Option<FiniteDistribution>,
}

impl TrueMeanOracle {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Mechanism for TrueMeanOracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn receive_samples(
        &mut self,
        _samples: &SampleSet,
        _rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        Ok(())
    }

    fn answer(&mut self, query: &Query, _rng: &mut StreamRng) -> Result<f64, GameError> {
        let dist = self
            .dist
            .as_ref()
            .ok_or_else(|| GameError::Other("oracle was not given the distribution".into()))?;
        Ok(dist.true_answer(query)?)
    }

    fn wants_distribution(&self) -> bool {
        true
    }

    fn observe_distribution(&mut self, dist: &FiniteDistribution) {
        self.dist = Some(dist.clone());
    }
}

/// `(q(x₁), …, q(xₙ))`.
#[derive(Clone, Debug, PartialEq)]
pub struct NaturalView {
    pub evals: Vec<f64>,
}

impl NaturalView {
    pub fn of(query: &Query, samples: &SampleSet) -> Result<Self, EvalError> {
        let evals = samples
            .iter()
            .map(|x| query.eval(x))
            .collect::<Result<_, _>>()?;
        Ok(Self { evals })
    }

    pub fn mean(&self) -> f64 {
        self.evals.iter().sum::<f64>() / self.evals.len() as f64
    }
}

/// Answer rule of a natural mechanism: sees only the natural view.
pub trait NaturalInner {
    fn name(&self) -> String;
    fn answer(&mut self, view: &NaturalView, rng: &mut StreamRng) -> f64;
}

impl<F: FnMut(&NaturalView, &mut StreamRng) -> f64> NaturalInner for F {
    fn name(&self) -> String {
        "closure".into()
    }
    fn answer(&mut self, view: &NaturalView, rng: &mut StreamRng) -> f64 {
        self(view, rng)
    }
}

/// Wraps a [`NaturalInner`] into a mechanism. The inner rule never sees the
/// query object itself.
pub struct Natural<I> {
    inner: I,
    samples: SampleSet,
}

impl<I: NaturalInner> Natural<I> {
    pub fn new(inner: I) -> Self {
        Self {
            inner,
            samples: SampleSet::default(),
        }
    }
}

impl<I: NaturalInner> Mechanism for Natural<I> {
    fn name(&self) -> String {
        format!("natural:{}", self.inner.name())
    }

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        _rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        self.samples = samples.clone();
        Ok(())
    }

    fn answer(&mut self, query: &Query, rng: &mut StreamRng) -> Result<f64, GameError> {
        let view = NaturalView::of(query, &self.samples)?;
        Ok(self.inner.answer(&view, rng))
    }
}

/// Stock natural answer rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerRule {
    Mean,
    Zero,
    Median,
    NoisyMean { sigma: f64 },
}

impl NaturalInner for InnerRule {
    fn name(&self) -> String {
        match self {
            InnerRule::Mean => "mean".into(),
            InnerRule::Zero => "zero".into(),
            InnerRule::Median => "median".into(),
            InnerRule::NoisyMean { .. } => "noisy".into(),
        }
    }

    fn answer(&mut self, view: &NaturalView, rng: &mut StreamRng) -> f64 {
        match *self {
            InnerRule::Mean => view.mean(),
            InnerRule::Zero => 0.0,
            InnerRule::Median => {
                let mut v = view.evals.clone();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    (v[n / 2 - 1] + v[n / 2]) / 2.0
                }
            }
            InnerRule::NoisyMean { sigma } => {
                (view.mean() + gaussian_noise(sigma, rng)).clamp(-1.0, 1.0)
            }
        }
    }
}

/// Mechanism choice as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MechanismSpec {
    Empirical,
    /// `None` means the default `√ℓ·ln(n)/n`.
    Gaussian {
        sigma: Option<f64>,
    },
    Oracle,
    Natural(NaturalRuleSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NaturalRuleSpec {
    Mean,
    Zero,
    Median,
    Noisy,
}

impl MechanismSpec {
    pub fn with_sigma(self, sigma: Option<f64>) -> Self {
        match self {
            MechanismSpec::Gaussian { .. } => MechanismSpec::Gaussian { sigma },
            other => other,
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, MechanismSpec::Oracle)
    }

    /// Noise level this spec resolves to for `(n, ℓ)`, if it adds noise.
    pub fn sigma(&self, n: usize, ell: usize) -> Option<f64> {
        match *self {
            MechanismSpec::Gaussian { sigma } => {
                Some(sigma.unwrap_or_else(|| default_sigma(n, ell)))
            }
            MechanismSpec::Natural(NaturalRuleSpec::Noisy) => Some(default_sigma(n, ell)),
            _ => None,
        }
    }

    pub fn build(&self, n: usize, ell: usize) -> Box<dyn Mechanism + Send> {
        match *self {
            MechanismSpec::Empirical => Box::new(EmpiricalMean::new()),
            MechanismSpec::Gaussian { .. } => Box::new(GaussianMechanism::new(
                NoiseSchedule::constant(self.sigma(n, ell).expect("gaussian has sigma")),
            )),
            MechanismSpec::Oracle => Box::new(TrueMeanOracle::new()),
            MechanismSpec::Natural(rule) => Box::new(Natural::new(match rule {
                NaturalRuleSpec::Mean => InnerRule::Mean,
                NaturalRuleSpec::Zero => InnerRule::Zero,
                NaturalRuleSpec::Median => InnerRule::Median,
                NaturalRuleSpec::Noisy => InnerRule::NoisyMean {
                    sigma: default_sigma(n, ell),
                },
            })),
        }
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismSpec::Empirical => f.write_str("empirical"),
            MechanismSpec::Gaussian { .. } => f.write_str("gaussian"),
            MechanismSpec::Oracle => f.write_str("oracle"),
            MechanismSpec::Natural(r) => write!(
                f,
                "natural:{}",
                match r {
                    NaturalRuleSpec::Mean => "mean",
                    NaturalRuleSpec::Zero => "zero",
                    NaturalRuleSpec::Median => "median",
                    NaturalRuleSpec::Noisy => "noisy",
                }
            ),
        }
    }
}

impl FromStr for MechanismSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "empirical" => MechanismSpec::Empirical,
            "gaussian" => MechanismSpec::Gaussian { sigma: None },
            "oracle" => MechanismSpec::Oracle,
            "natural:mean" => MechanismSpec::Natural(NaturalRuleSpec::Mean),
            "natural:zero" => MechanismSpec::Natural(NaturalRuleSpec::Zero),
            "natural:median" => MechanismSpec::Natural(NaturalRuleSpec::Median),
            "natural:noisy" => MechanismSpec::Natural(NaturalRuleSpec::Noisy),
            _ => {
                return Err(format!(
                    "unknown mechanism `{s}` (expected empirical, gaussian, oracle or natural:<mean|zero|median|noisy>)"
                ))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DomainSpec, Element};
    use crate::rng::stream;

    fn samples(ix: &[u32]) -> SampleSet {
        SampleSet::new(ix.iter().map(|&j| Element::Index(j)).collect())
    }

    #[test]
    fn empirical_examples() {
        let d = DomainSpec::index(3);
        let q = Query::table(d, vec![0.0, 1.0, -1.0]).unwrap();
        assert!((empirical_answer(&samples(&[1, 1, 2]), &q).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let zero = Query::table(d, vec![0.0; 3]).unwrap();
        assert_eq!(empirical_answer(&samples(&[0, 1, 2]), &zero).unwrap(), 0.0);
        let q = Query::table(d, vec![0.3, 0.75, -0.2]).unwrap();
        assert_eq!(empirical_answer(&samples(&[1; 9]), &q).unwrap(), 0.75);
    }

    #[test]
    fn gaussian_examples() {
        let d = DomainSpec::index(2);
        let q = Query::table(d, vec![0.5, -0.25]).unwrap();
        let s = samples(&[0, 1, 1, 0]);
        let mut rng = stream(9, "g");
        let (y, raw) = gaussian_answer(&s, &q, 0.0, &mut rng).unwrap();
        assert_eq!(y, empirical_answer(&s, &q).unwrap());
        assert_eq!(y, raw);
        for _ in 0..100 {
            let (y, _) = gaussian_answer(&s, &q, 10.0, &mut rng).unwrap();
            assert!((-1.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn gaussian_noise_std() {
        let d = DomainSpec::index(1);
        let q = Query::table(d, vec![0.0]).unwrap();
        let s = samples(&[0]);
        let mut rng = stream(10, "g");
        let draws: Vec<f64> = (0..100_000)
            .map(|_| gaussian_answer(&s, &q, 0.05, &mut rng).unwrap().1)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var.sqrt() - 0.05).abs() < 0.002, "std {}", var.sqrt());
    }

    #[test]
    fn natural_adapter_matches_and_ignores_off_sample() {
        let d = DomainSpec::index(4);
        let s = samples(&[0, 2, 2]);
        let mut rng = stream(1, "n");
        let mut nat = Natural::new(InnerRule::Mean);
        let mut emp = EmpiricalMean::new();
        nat.receive_samples(&s, &mut rng).unwrap();
        emp.receive_samples(&s, &mut rng).unwrap();
        let q = Query::table(d, vec![0.5, 1.0, -0.5, -1.0]).unwrap();
        let q2 = Query::table(d, vec![0.5, -1.0, -0.5, 1.0]).unwrap();
        let a = nat.answer(&q, &mut rng).unwrap();
        assert_eq!(a, emp.answer(&q, &mut rng).unwrap());
        assert_eq!(a, nat.answer(&q2, &mut rng).unwrap());
        let mut zero = Natural::new(InnerRule::Zero);
        zero.receive_samples(&s, &mut rng).unwrap();
        assert_eq!(zero.answer(&q, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn spec_parsing() {
        for s in [
            "empirical",
            "gaussian",
            "oracle",
            "natural:mean",
            "natural:zero",
            "natural:median",
            "natural:noisy",
        ] {
            assert_eq!(s.parse::<MechanismSpec>().unwrap().to_string(), s);
        }
        assert!("natural:foo".parse::<MechanismSpec>().is_err());
        assert!((default_sigma(200, 200) - 200f64.sqrt() * 200f64.ln() / 200.0).abs() < 1e-15);
    }
}
