use std::collections::HashMap;

use super::approx::ApproxAgreementRun;
use crate::game::{QueryDigest, Transcript};

/// Secrecy radius against `P₁`'s output.
pub const OUTPUT_RADIUS: f64 = 1.0 / 20.0;
/// Radius against the last query's true value.
pub const TRUTH_RADIUS: f64 = 1.0 / 10.0;

/// Predicts the protocol output from the transcript alone.
pub trait Eavesdropper: Sync {
    fn name(&self) -> String;
    fn predict(&self, transcript: &Transcript) -> f64;
}

/// Repeats the last answer.
#[derive(Clone, Copy, Debug, Default)]
pub struct LastAnswerEcho;

impl Eavesdropper for LastAnswerEcho {
    fn name(&self) -> String {
        "last-answer".into()
    }

    fn predict(&self, transcript: &Transcript) -> f64 {
        transcript.last_answer().unwrap_or(0.0)
    }
}

/// Averages all answers.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanOfAnswers;

impl Eavesdropper for MeanOfAnswers {
    fn name(&self) -> String {
        "mean-of-answers".into()
    }

    fn predict(&self, transcript: &Transcript) -> f64 {
        if transcript.is_empty() {
            return 0.0;
        }
        transcript.answers().sum::<f64>() / transcript.len() as f64
    }
}

/// Harness check: looks up values handed to it outside the protocol,
/// keyed by transcript fingerprint.
#[derive(Clone, Debug, Default)]
pub struct OutOfBand {
    table: HashMap<QueryDigest, f64>,
}

impl OutOfBand {
    /// Hands over `q_ℓ(D)` of every run.
    pub fn true_values(runs: &[ApproxAgreementRun]) -> Self {
        Self {
            table: runs
                .iter()
                .map(|r| (r.transcript.fingerprint(), r.hidden_true))
                .collect(),
        }
    }
}

impl Eavesdropper for OutOfBand {
    fn name(&self) -> String {
        "out-of-band".into()
    }

    fn predict(&self, transcript: &Transcript) -> f64 {
        self.table
            .get(&transcript.fingerprint())
            .copied()
            .unwrap_or(0.0)
    }
}

/// Agreement and eavesdropper rates over a set of runs.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub runs: usize,
    pub agreement_radius: f64,
    pub agreement_rate: f64,
    /// `(name, hit rate within 1/20 of o1, hit rate within 1/10 of q_ℓ(D))`.
    pub eavesdroppers: Vec<(String, f64, f64)>,
}

impl GapReport {
    /// Largest hit rate against `o1` among the eavesdroppers.
    pub fn best_hit_rate(&self) -> f64 {
        self.eavesdroppers.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn gap(&self) -> f64 {
        self.agreement_rate - self.best_hit_rate()
    }
}

/// `2·n^{-1/10}`.
pub fn agreement_radius(n: usize) -> f64 {
    2.0 * (n as f64).powf(-0.1)
}

pub fn eavesdropper_gap(
    runs: &[ApproxAgreementRun],
    n: usize,
    eavesdroppers: &[&dyn Eavesdropper],
) -> GapReport {
    let radius = agreement_radius(n);
    let total = runs.len().max(1) as f64;
    let agree = runs
        .iter()
        .filter(|r| (r.o1 - r.o2).abs() <= radius)
        .count() as f64
        / total;
    let eavesdroppers = eavesdroppers
        .iter()
        .map(|g| {
            let mut near_output = 0usize;
            let mut near_truth = 0usize;
            for r in runs {
                let guess = g.predict(&r.transcript);
                near_output += usize::from((guess - r.o1).abs() <= OUTPUT_RADIUS);
                near_truth += usize::from((guess - r.hidden_true).abs() <= TRUTH_RADIUS);
            }
            (
                g.name(),
                near_output as f64 / total,
                near_truth as f64 / total,
            )
        })
        .collect();
    GapReport {
        runs: runs.len(),
        agreement_radius: radius,
        agreement_rate: agree,
        eavesdroppers,
    }
}
