use super::transcript::{Transcript, TranscriptMode};
use super::{
    Analyst, FiniteDistribution, GameError, GameResult, Mechanism, PublicInputs, Query, SampleSet,
    Sampler, FAILURE_THRESHOLD,
};
use crate::rng::{role, stream};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GameOptions {
    /// Permit mechanisms that ask for the distribution.
    pub allow_oracle: bool,
    pub transcript: TranscriptMode,
    /// End the game at the first round with error above `1/10`.
    pub stop_at_first_failure: bool,
}

/// Everything a finished game produced.
#[derive(Clone, Debug)]
pub struct GameRecord {
    pub result: GameResult,
    pub transcript: Transcript,
    pub samples: SampleSet,
    pub distribution: FiniteDistribution,
}

/// Checks a query against the public domain before it reaches the mechanism.
pub(crate) fn check_query(
    query: &Query,
    public: &PublicInputs,
    round: usize,
) -> Result<(), GameError> {
    if query.domain != public.domain {
        return Err(GameError::ProtocolViolation {
            round,
            reason: format!(
                "query over {} in a game over {}",
                query.domain, public.domain
            ),
        });
    }
    query.check().map_err(|e| GameError::ProtocolViolation {
        round,
        reason: e.to_string(),
    })
}

/// Clips a raw answer into `[-1, 1]`; returns `(answer, clipped)`.
pub(crate) fn clip_answer(raw: f64, round: usize) -> Result<(f64, bool), GameError> {
    if raw.is_nan() {
        return Err(GameError::ProtocolViolation {
            round,
            reason: "mechanism answered NaN".into(),
        });
    }
    let y = raw.clamp(-1.0, 1.0);
    Ok((y, y != raw))
}

/// Plays one game. Each party draws from its own stream derived from `seed`,
/// so a fixed seed gives a bit-identical record.
pub fn run_game(
    mechanism: &mut dyn Mechanism,
    sampler: &mut dyn Sampler,
    analyst: &mut dyn Analyst,
    public: &PublicInputs,
    seed: u64,
    options: &GameOptions,
) -> Result<GameRecord, GameError> {
    if public.n == 0 || public.ell == 0 {
        return Err(GameError::InvalidParameters(
            "n and ell must be positive".into(),
        ));
    }
    if !public.domain.is_valid() {
        return Err(GameError::InvalidParameters(format!(
            "degenerate domain {}",
            public.domain
        )));
    }
    let mut sampler_rng = stream(seed, role::SAMPLER);
    let mut mech_rng = stream(seed, role::MECHANISM);
    let mut analyst_rng = stream(seed, role::ANALYST);

    let dist = sampler.choose(public, &mut sampler_rng)?;
    if dist.domain() != public.domain {
        return Err(GameError::DomainMismatch {
            expected: public.domain,
            got: dist.domain(),
        });
    }
    let samples = dist.sample_n(public.n, &mut sampler_rng);

    if mechanism.wants_distribution() {
        if !options.allow_oracle {
            return Err(GameError::OracleNotAllowed(mechanism.name()));
        }
        mechanism.observe_distribution(&dist);
    }
    mechanism.receive_samples(&samples, &mut mech_rng)?;

    let mut transcript = Transcript::new(public.n, public.ell, public.domain, options.transcript);
    let mut result = GameResult::default();
    for round in 0..public.ell {
        let query = analyst.next_query(&mut analyst_rng)?;
        check_query(&query, public, round)?;
        let raw = mechanism.answer(&query, &mut mech_rng)?;
        let (y, clipped) = clip_answer(raw, round)?;
        if clipped {
            result.clipped_rounds.push(round);
        }
        let truth = dist
            .true_answer_detailed(&query)
            .map_err(|source| GameError::Evaluation { round, source })?;
        if truth.decrypt_failures > 0 {
            result.decrypt_failure_rounds.push(round);
        }
        result.push(truth.value, y);
        transcript.push(&query, y);
        analyst.absorb(y);
        if options.stop_at_first_failure && (y - truth.value).abs() > FAILURE_THRESHOLD {
            break;
        }
    }
    Ok(GameRecord {
        result,
        transcript,
        samples,
        distribution: dist,
    })
}
