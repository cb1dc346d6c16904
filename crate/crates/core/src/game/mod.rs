//! The adaptive data analysis game.
//!
//! A [`Sampler`] chooses a [`FiniteDistribution`] and the referee draws the
//! mechanism's sample from it. An [`Analyst`], built beforehand from
//! [`PublicInputs`] only, then asks `ℓ` queries. The mechanism fails the
//! game if any answer is more than `1/10` away from the query's exact value
//! on the distribution.

mod distribution;
mod domain;
mod query;
mod referee;
mod transcript;

use thiserror::Error;

pub use distribution::{FiniteDistribution, TrueAnswer};
pub use domain::{DomainSpec, Element, SampleSet, Triplet};
pub use query::{EvalError, Query, QueryDigest, QueryForm};
pub(crate) use referee::{check_query, clip_answer};
pub use referee::{run_game, GameOptions, GameRecord};
pub use transcript::{parse_log, write_log, LogRow, Round, Transcript, TranscriptMode};

use crate::ibe::IbeError;
use crate::rng::StreamRng;

/// Accuracy threshold of the game.
pub const FAILURE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("protocol violation in round {round}: {reason}")]
    ProtocolViolation { round: usize, reason: String },
    #[error("evaluation failed in round {round}: {source}")]
    Evaluation { round: usize, source: EvalError },
    #[error("sampler chose domain {got}, public inputs say {expected}")]
    DomainMismatch {
        expected: DomainSpec,
        got: DomainSpec,
    },
    #[error("mechanism `{0}` needs the distribution; oracle mechanisms are disabled")]
    OracleNotAllowed(String),
    #[error(transparent)]
    Evaluate(#[from] EvalError),
    #[error(transparent)]
    Ibe(#[from] IbeError),
    #[error("{0}")]
    Other(String),
}

/// What every party knows before the game starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicInputs {
    pub n: usize,
    pub ell: usize,
    pub domain: DomainSpec,
}

/// First half of a balanced adversary.
pub trait Sampler {
    fn choose(
        &mut self,
        public: &PublicInputs,
        rng: &mut StreamRng,
    ) -> Result<FiniteDistribution, GameError>;
}

/// Second half of a balanced adversary. It never sees the sampler.
pub trait Analyst {
    fn next_query(&mut self, rng: &mut StreamRng) -> Result<Query, GameError>;
    fn absorb(&mut self, answer: f64);
}

pub trait Mechanism {
    fn name(&self) -> String;

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        rng: &mut StreamRng,
    ) -> Result<(), GameError>;

    /// Any real is accepted; the referee clips to `[-1, 1]`.
    fn answer(&mut self, query: &Query, rng: &mut StreamRng) -> Result<f64, GameError>;

    /// Test-only mechanisms that are handed the distribution.
    fn wants_distribution(&self) -> bool {
        false
    }

    fn observe_distribution(&mut self, _dist: &FiniteDistribution) {}
}

impl<M: Mechanism + ?Sized> Mechanism for Box<M> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        (**self).receive_samples(samples, rng)
    }
    fn answer(&mut self, query: &Query, rng: &mut StreamRng) -> Result<f64, GameError> {
        (**self).answer(query, rng)
    }
    fn wants_distribution(&self) -> bool {
        (**self).wants_distribution()
    }
    fn observe_distribution(&mut self, dist: &FiniteDistribution) {
        (**self).observe_distribution(dist)
    }
}

/// Per-round record of a finished game.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GameResult {
    pub true_answers: Vec<f64>,
    pub given_answers: Vec<f64>,
    pub errors: Vec<f64>,
    pub outcome: bool,
    pub first_failure_round: Option<usize>,
    /// Rounds whose raw answer had to be clipped into `[-1, 1]`.
    pub clipped_rounds: Vec<usize>,
    /// Rounds where some support point's ciphertext failed to decrypt.
    pub decrypt_failure_rounds: Vec<usize>,
}

impl GameResult {
    pub fn push(&mut self, true_answer: f64, given: f64) {
        let err = (given - true_answer).abs();
        if err > FAILURE_THRESHOLD && self.first_failure_round.is_none() {
            self.first_failure_round = Some(self.errors.len());
            self.outcome = true;
        }
        self.true_answers.push(true_answer);
        self.given_answers.push(given);
        self.errors.push(err);
    }

    pub fn rounds(&self) -> usize {
        self.errors.len()
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// 1 iff some error exceeds `1/10` (strictly).
pub fn outcome_of(errors: &[f64]) -> bool {
    errors.iter().any(|&e| e > FAILURE_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_examples() {
        assert!(!outcome_of(&[0.05, 0.1]));
        assert!(outcome_of(&[0.0, 0.100001]));
        assert!(!outcome_of(&[0.0; 8]));
        assert!(!outcome_of(&[]));
    }

    #[test]
    fn result_tracks_first_failure() {
        let mut r = GameResult::default();
        r.push(0.0, 0.05);
        r.push(0.0, 0.3);
        r.push(0.0, -0.5);
        assert!(r.outcome);
        assert_eq!(r.first_failure_round, Some(1));
        assert_eq!(r.outcome, outcome_of(&r.errors));
    }
}
