use std::sync::Arc;

use super::approx::ApproxProtocol;
use super::bucket::{inner_product, Bucketing};
use super::KaError;
use crate::game::Transcript;
use crate::rng::stream;

/// One weak key-agreement run.
#[derive(Clone, Debug)]
pub struct WeakKaRun {
    pub o1: f64,
    pub o2: f64,
    /// Public offset and vector sent by the first party.
    pub v: f64,
    pub r: u64,
    pub bucket1: usize,
    pub bucket2: usize,
    pub bit1: bool,
    pub bit2: bool,
    /// Transcript of the underlying approximate agreement.
    pub transcript: Arc<Transcript>,
}

impl WeakKaRun {
    pub fn agree(&self) -> bool {
        self.bit1 == self.bit2
    }

    pub fn same_bucket(&self) -> bool {
        self.bucket1 == self.bucket2
    }
}

pub fn run_weak_ka(
    protocol: &dyn ApproxProtocol,
    bucketing: &Bucketing,
    n: usize,
    seed: u64,
) -> Result<WeakKaRun, KaError> {
    bucketing.check_for(n)?;
    let out = protocol.run(n, seed)?;
    let mut rng = stream(seed, "weak-ka/first-party");
    let v = bucketing.offset(&mut rng);
    let r = bucketing.random_vector(&mut rng);
    let bucket1 = bucketing.bucketize(out.o1 + v);
    let bucket2 = bucketing.bucketize(out.o2 + v);
    Ok(WeakKaRun {
        o1: out.o1,
        o2: out.o2,
        v,
        r,
        bucket1,
        bucket2,
        bit1: inner_product(bucket1 as u64, r),
        bit2: inner_product(bucket2 as u64, r),
        transcript: out.transcript,
    })
}
