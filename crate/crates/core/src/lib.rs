//! Simulation framework for the balanced adversarial model of adaptive data
//! analysis.
//!
//! The crate is organised around the game referee in [`game`]: a sampler
//! picks a finite distribution and hands `n` samples to a [`Mechanism`],
//! an isolated analyst asks `ℓ` statistical queries, and the referee compares
//! every answer with the exact population value.
//!
//! On top of the referee sit
//!
//! - [`mechanisms`]: empirical mean, Gaussian noise, a true-mean oracle and
//!   the natural-mechanism adapter,
//! - [`fingerprint`]: the correlation-score interactive fingerprinting attack
//!   that breaks natural mechanisms,
//! - [`ibe`]: the identity-based encryption interface with two
//!   simulation-grade schemes,
//! - [`balanced`]: the sampler/analyst pair that uses IBE to force any
//!   mechanism to behave naturally, plus the natural wrapper used to analyse it,
//! - [`key_agreement`]: approximate agreement from a balanced adversary,
//!   bucketing into a weak key agreement, and Goldreich–Levin decoding,
//! - [`harness`]: seeded trial batches, statistics, CSV output and sweeps.
//!
//! Nothing in this crate is cryptographically secure. The IBE schemes exist
//! to exercise interfaces and key-size shapes at desk scale.
//!
//! [`Mechanism`]: game::Mechanism

pub mod balanced;
pub mod fingerprint;
pub mod game;
pub mod harness;
pub mod ibe;
pub mod key_agreement;
pub mod mechanisms;
pub mod par;
pub mod rng;

pub use game::{
    outcome_of, run_game, DomainSpec, Element, FiniteDistribution, GameError, GameOptions,
    GameResult, PublicInputs, Query, SampleSet, Transcript,
};
