//! From a balanced adversary to key agreement.
//!
//! [`approx`] runs the two-party approximate-agreement protocol: one party
//! holds the sampler and answers empirical means, the other runs the
//! analyst and outputs what it knows about the last query's true value.
//! [`weak`] turns approximate agreement into a one-bit weak key agreement by
//! bucketing with a shared random offset and taking an inner product with a
//! shared random vector; [`gl`] contains the Goldreich–Levin style decoder
//! used to argue secrecy of that step.

pub mod approx;
pub mod bucket;
pub mod eavesdrop;
pub mod gl;
pub mod weak;

use thiserror::Error;

use crate::game::GameError;

pub use approx::{
    balanced_approx_agreement, extractor_f, run_approx_agreement, ApproxAgreementRun,
    ApproxOutputs, ApproxProtocol, BalancedApprox, SecondSample, SyntheticApprox,
};
pub use bucket::{inner_product, Bucketing};
pub use eavesdrop::{
    eavesdropper_gap, Eavesdropper, GapReport, LastAnswerEcho, MeanOfAnswers, OutOfBand,
};
pub use gl::{
    gl_attack_ka, gl_decode, BitGuesser, CheatingGuesser, ExactOracle, FairCoin, GlOracle,
    NoisyOracle,
};
pub use weak::{run_weak_ka, WeakKaRun};

#[derive(Debug, Error)]
pub enum KaError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("the analyst view has no final wrapped query")]
    MissingFinalQuery,
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<crate::ibe::IbeError> for KaError {
    fn from(e: crate::ibe::IbeError) -> Self {
        KaError::Game(e.into())
    }
}
