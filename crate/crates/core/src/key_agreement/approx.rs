use std::sync::Arc;

use rand::Rng;

use super::KaError;
use crate::balanced::{BalancedAnalyst, BalancedConfig, BalancedSampler};
use crate::fingerprint::FingerprintAnalyst;
use crate::game::{
    check_query, clip_answer, Analyst, FiniteDistribution, PublicInputs, Query, SampleSet, Sampler,
    Transcript, TranscriptMode,
};
use crate::ibe::build_scheme;
use crate::mechanisms::empirical_answer;
use crate::rng::{role, stream, StreamRng};

/// Which sample the first party evaluates the last query on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SecondSample {
    /// `n` fresh draws after the first `n`.
    #[default]
    Fresh,
    /// Reuse the answering sample (test mode).
    SameAsFirst,
}

/// Outcome of one approximate-agreement run.
#[derive(Clone, Debug)]
pub struct ApproxAgreementRun {
    pub transcript: Transcript,
    /// `q_ℓ(S′)`.
    pub o1: f64,
    /// `F(view)`.
    pub o2: f64,
    /// `q_ℓ(D)`, kept for assertions only.
    pub hidden_true: f64,
    pub samples: SampleSet,
    pub second_samples: SampleSet,
}

/// First party: owns the distribution and both samples.
struct SamplerParty {
    dist: FiniteDistribution,
    first: SampleSet,
    second: SampleSet,
    last_query: Option<Query>,
}

impl SamplerParty {
    fn start(
        sampler: &mut dyn Sampler,
        public: &PublicInputs,
        seed: u64,
        mode: SecondSample,
    ) -> Result<Self, KaError> {
        let mut rng = stream(seed, role::SAMPLER);
        let dist = sampler.choose(public, &mut rng)?;
        let first = dist.sample_n(public.n, &mut rng);
        let second = match mode {
            SecondSample::Fresh => dist.sample_n(public.n, &mut rng),
            SecondSample::SameAsFirst => first.clone(),
        };
        Ok(Self {
            dist,
            first,
            second,
            last_query: None,
        })
    }

    fn respond(&mut self, query: &Query) -> Result<f64, KaError> {
        let y = empirical_answer(&self.first, query).map_err(crate::game::GameError::from)?;
        self.last_query = Some(query.clone());
        Ok(y)
    }

    fn output(&self) -> Result<(f64, f64), KaError> {
        let q = self.last_query.as_ref().ok_or(KaError::MissingFinalQuery)?;
        let o1 = empirical_answer(&self.second, q).map_err(crate::game::GameError::from)?;
        let truth = self
            .dist
            .true_answer(q)
            .map_err(crate::game::GameError::from)?;
        Ok((o1, truth))
    }
}

/// In-memory channel; everything sent over it is the transcript.
struct Channel {
    transcript: Transcript,
}

impl Channel {
    fn exchange(
        &mut self,
        query: &Query,
        party: &mut SamplerParty,
        public: &PublicInputs,
        round: usize,
    ) -> Result<f64, KaError> {
        check_query(query, public, round)?;
        let (y, _) = clip_answer(party.respond(query)?, round)?;
        self.transcript.push(query, y);
        Ok(y)
    }
}

/// Runs the protocol with any sampler/analyst pair and view extractor.
/// The transcript matches a game against the empirical mean under the same
/// seed, message for message.
pub fn run_approx_agreement<A: Analyst>(
    sampler: &mut dyn Sampler,
    analyst: &mut A,
    extractor: impl Fn(&A) -> Result<f64, KaError>,
    public: &PublicInputs,
    seed: u64,
    mode: SecondSample,
    transcript_mode: TranscriptMode,
) -> Result<ApproxAgreementRun, KaError> {
    if public.n == 0 || public.ell == 0 {
        return Err(KaError::Config("n and ell must be positive".into()));
    }
    let mut p1 = SamplerParty::start(sampler, public, seed, mode)?;
    let mut analyst_rng: StreamRng = stream(seed, role::ANALYST);
    let mut channel = Channel {
        transcript: Transcript::new(public.n, public.ell, public.domain, transcript_mode),
    };
    for round in 0..public.ell {
        let q = analyst.next_query(&mut analyst_rng)?;
        let y = channel.exchange(&q, &mut p1, public, round)?;
        analyst.absorb(y);
    }
    let (o1, hidden_true) = p1.output()?;
    let o2 = extractor(analyst)?;
    Ok(ApproxAgreementRun {
        transcript: channel.transcript,
        o1,
        o2,
        hidden_true,
        samples: p1.first,
        second_samples: p1.second,
    })
}

/// `F`: the mean over `[m]` of the last inner query the analyst wrapped.
pub fn extractor_f<A: Analyst>(view: &BalancedAnalyst<A>) -> Result<f64, KaError> {
    let q = view.last_inner_query().ok_or(KaError::MissingFinalQuery)?;
    Ok(q.iter().sum::<f64>() / q.len() as f64)
}

/// The protocol instantiated with the IBE-based balanced adversary.
pub fn balanced_approx_agreement(
    n: usize,
    cfg: &BalancedConfig,
    seed: u64,
    mode: SecondSample,
    transcript_mode: TranscriptMode,
) -> Result<ApproxAgreementRun, KaError> {
    cfg.attack.validate(n)?;
    let scheme = build_scheme(cfg.scheme, cfg.lambda)?;
    let public = cfg.public_inputs(n, scheme.as_ref());
    let mut sampler = BalancedSampler::new(scheme.clone());
    let mut analyst = BalancedAnalyst::new(
        scheme,
        public.domain,
        FingerprintAnalyst::new(n, &cfg.attack),
    )?;
    run_approx_agreement(
        &mut sampler,
        &mut analyst,
        extractor_f,
        &public,
        seed,
        mode,
        transcript_mode,
    )
}

/// The two outputs and the public transcript of one run.
#[derive(Clone, Debug)]
pub struct ApproxOutputs {
    pub o1: f64,
    pub o2: f64,
    pub transcript: Arc<Transcript>,
}

/// An approximate-agreement protocol as seen by the bucketing step.
pub trait ApproxProtocol: Sync {
    fn name(&self) -> String;
    fn run(&self, n: usize, seed: u64) -> Result<ApproxOutputs, KaError>;
}

/// The balanced-adversary protocol.
#[derive(Clone, Debug)]
pub struct BalancedApprox {
    pub cfg: BalancedConfig,
}

impl ApproxProtocol for BalancedApprox {
    fn name(&self) -> String {
        "balanced".into()
    }

    fn run(&self, n: usize, seed: u64) -> Result<ApproxOutputs, KaError> {
        let r = balanced_approx_agreement(
            n,
            &self.cfg,
            seed,
            SecondSample::Fresh,
            TranscriptMode::DigestOnly,
        )?;
        Ok(ApproxOutputs {
            o1: r.o1,
            o2: r.o2,
            transcript: Arc::new(r.transcript),
        })
    }
}

/// Stand-in with outputs exactly `gap` apart: `o1 ~ U[-1+gap, 1-gap]`,
/// `o2 = o1 ± gap`. Its transcript is empty.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticApprox {
    pub gap: f64,
}

impl ApproxProtocol for SyntheticApprox {
    fn name(&self) -> String {
        format!("synthetic(gap={})", self.gap)
    }

    fn run(&self, n: usize, seed: u64) -> Result<ApproxOutputs, KaError> {
        if !(0.0..1.0).contains(&self.gap) {
            return Err(KaError::Config(format!(
                "synthetic gap {} outside [0, 1)",
                self.gap
            )));
        }
        let mut rng = stream(seed, "synthetic-approx");
        let o1 = rng.random_range(-1.0 + self.gap..=1.0 - self.gap);
        let o2 = if rng.random_bool(0.5) {
            o1 + self.gap
        } else {
            o1 - self.gap
        };
        let transcript = Transcript::new(
            n,
            0,
            crate::game::DomainSpec::index(1),
            TranscriptMode::DigestOnly,
        );
        Ok(ApproxOutputs {
            o1,
            o2,
            transcript: Arc::new(transcript),
        })
    }
}
