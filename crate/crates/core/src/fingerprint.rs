//! Interactive fingerprinting attack against natural mechanisms.
//!
//! The sampler always picks the uniform distribution over `[m]`, `m = c·n`.
//! The analyst asks random `{-1, 1}` tables with a fresh column bias each
//! round and keeps a correlation score per index. Indices whose score
//! outgrows a `τ·√t` boundary are accused and zeroed in later queries. The
//! last query is `0` on accused indices and a random sign elsewhere: a
//! natural mechanism whose sample is mostly accused sees (almost) all zeros
//! and cannot tell which sign the population value has.

use std::sync::Arc;

use rand::Rng;

use crate::game::{
    run_game, Analyst, DomainSpec, FiniteDistribution, GameError, GameOptions, GameRecord,
    Mechanism, PublicInputs, Query, SampleSet, Sampler, FAILURE_THRESHOLD,
};
use crate::rng::StreamRng;

/// Attack parameters. `None` fields resolve to defaults depending on `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    /// Universe multiplier: `m = c·n`.
    pub c: usize,
    /// Total rounds `ℓ̃`, including the final query.
    pub rounds: Option<usize>,
    /// Boundary multiplier in units of the null standard deviation and
    /// `√(2 ln m)`. Ignored when `tau` is set.
    pub kappa: f64,
    /// Absolute boundary constant: accuse when `score > tau·√t`.
    pub tau: Option<f64>,
    /// Maximum number of accusations, default `2n`.
    pub cap: Option<usize>,
    /// No accusations before this many scored rounds, default `n`.
    pub warmup: Option<usize>,
    /// Forgetting factor of the answer-scale estimate.
    pub decay: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            c: 2000,
            rounds: None,
            kappa: DEFAULT_KAPPA,
            tau: None,
            cap: None,
            warmup: None,
            decay: 0.98,
        }
    }
}

/// Calibrated boundary multiplier.
pub const DEFAULT_KAPPA: f64 = 1.0;
/// Calibrated budget rule: `ℓ̃ = ⌈ROUNDS_PER_N_LOG_M · n · ln m⌉`.
pub const ROUNDS_PER_N_LOG_M: f64 = 6.0;

/// Default budget for `n` samples over a universe of `c·n` points.
pub fn default_rounds(n: usize, c: usize) -> usize {
    let m = (n * c).max(2) as f64;
    (ROUNDS_PER_N_LOG_M * n as f64 * m.ln()).ceil() as usize + 1
}

/// `κ·√(2 ln m)·√(8/(15n))`: the null per-round score deviation scaled to
/// a union bound over `m` indices.
pub fn default_tau(n: usize, m: usize, kappa: f64) -> f64 {
    kappa * (2.0 * (m.max(2) as f64).ln()).sqrt() * (8.0 / (15.0 * n as f64)).sqrt()
}

impl AttackConfig {
    pub fn with_c(c: usize) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }

    pub fn m(&self, n: usize) -> usize {
        self.c * n
    }

    pub fn rounds_for(&self, n: usize) -> usize {
        self.rounds.unwrap_or_else(|| default_rounds(n, self.c))
    }

    pub fn tau_for(&self, n: usize) -> f64 {
        self.tau
            .unwrap_or_else(|| default_tau(n, self.m(n), self.kappa))
    }

    pub fn cap_for(&self, n: usize) -> usize {
        self.cap.unwrap_or(2 * n)
    }

    pub fn validate(&self, n: usize) -> Result<(), GameError> {
        if n == 0 {
            return Err(GameError::InvalidParameters("n must be positive".into()));
        }
        if self.c < 4 {
            return Err(GameError::InvalidParameters(format!(
                "c must be at least 4, got {}",
                self.c
            )));
        }
        if self.rounds_for(n) == 0 {
            return Err(GameError::InvalidParameters(
                "rounds must be positive".into(),
            ));
        }
        if !(self.tau_for(n) > 0.0) {
            return Err(GameError::InvalidParameters("tau must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(GameError::InvalidParameters(
                "decay must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn ifpc_params(&self, n: usize) -> IfpcParams {
        IfpcParams {
            n,
            m: self.m(n),
            tau: self.tau_for(n),
            cap: self.cap_for(n),
            warmup: self.warmup.unwrap_or(n),
            decay: self.decay,
        }
    }
}

/// Uniform distribution over `[c·n]`.
pub fn tilde_sampler(n: usize, c: usize) -> Result<FiniteDistribution, GameError> {
    FiniteDistribution::uniform_index(n * c)
}

/// Sampler half of the attack.
#[derive(Clone, Copy, Debug)]
pub struct TildeSampler {
    pub c: usize,
}

impl Sampler for TildeSampler {
    fn choose(
        &mut self,
        public: &PublicInputs,
        _rng: &mut StreamRng,
    ) -> Result<FiniteDistribution, GameError> {
        tilde_sampler(public.n, self.c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IfpcParams {
    pub n: usize,
    pub m: usize,
    pub tau: f64,
    pub cap: usize,
    pub warmup: usize,
    pub decay: f64,
}

#[derive(Clone, Debug)]
struct Pending {
    p: f64,
    values: Arc<[f64]>,
}

/// Score state of the fingerprinting code.
#[derive(Clone, Debug)]
pub struct IfpcState {
    params: IfpcParams,
    scores: Vec<f64>,
    accused: Vec<bool>,
    /// `(index, scored round)` in accusation order.
    accusations: Vec<(usize, usize)>,
    scored: usize,
    pending: Option<Pending>,
    /// `(bias, answer)` of every scored round.
    history: Vec<(f64, f64)>,
    sxy: f64,
    sxx: f64,
}

impl IfpcState {
    pub fn new(params: IfpcParams) -> Self {
        let m = params.m;
        Self {
            params,
            scores: vec![0.0; m],
            accused: vec![false; m],
            accusations: Vec::new(),
            scored: 0,
            pending: None,
            history: Vec::new(),
            // Prior worth a few rounds of slope 1.
            sxy: 2.0,
            sxx: 2.0,
        }
    }

    pub fn params(&self) -> &IfpcParams {
        &self.params
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn is_accused(&self, j: usize) -> bool {
        self.accused[j]
    }

    pub fn accused(&self) -> Vec<usize> {
        self.accusations.iter().map(|&(j, _)| j).collect()
    }

    pub fn accusations(&self) -> &[(usize, usize)] {
        &self.accusations
    }

    pub fn accused_count(&self) -> usize {
        self.accusations.len()
    }

    pub fn rounds_scored(&self) -> usize {
        self.scored
    }

    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }

    /// Current estimate of `E[y] / (2p − 1)`.
    pub fn answer_scale(&self) -> f64 {
        (self.sxy / self.sxx).clamp(0.0, 1.0)
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Draws a bias `p ~ U[0,1]` and a `{-1, 1}` column with `P[+1] = p`,
    /// zeroed on accused indices.
    pub fn next_query(&mut self, rng: &mut StreamRng) -> Arc<[f64]> {
        let p: f64 = rng.random();
        self.next_query_with_bias(p, rng)
    }

    pub fn next_query_with_bias(&mut self, p: f64, rng: &mut StreamRng) -> Arc<[f64]> {
        let values: Arc<[f64]> = self
            .accused
            .iter()
            .map(|&acc| {
                let plus = rng.random_bool(p);
                if acc {
                    0.0
                } else if plus {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        self.pending = Some(Pending {
            p,
            values: values.clone(),
        });
        values
    }

    /// Scores the pending query against answer `y` and accuses indices
    /// above the boundary.
    pub fn process_answer(&mut self, y: f64) {
        let Some(Pending { p, values }) = self.pending.take() else {
            return;
        };
        let mu = 2.0 * p - 1.0;
        let m = self.params.m as f64;
        let centred = y - self.answer_scale() * mu;
        for (j, &v) in values.iter().enumerate() {
            if self.accused[j] {
                continue;
            }
            let d = v - mu;
            self.scores[j] += d * centred - d * d / m;
        }
        self.scored += 1;
        self.history.push((p, y));
        self.sxy = self.params.decay * self.sxy + y * mu;
        self.sxx = self.params.decay * self.sxx + mu * mu;

        if self.scored < self.params.warmup {
            return;
        }
        let boundary = self.params.tau * (self.scored as f64).sqrt();
        let mut over: Vec<usize> = (0..self.params.m)
            .filter(|&j| !self.accused[j] && self.scores[j] > boundary)
            .collect();
        over.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        for j in over {
            if self.accusations.len() >= self.params.cap {
                break;
            }
            self.accused[j] = true;
            self.accusations.push((j, self.scored));
        }
    }

    /// `0` on accused indices, `σ` elsewhere. Returns the table and `σ`.
    pub fn final_query(&self, rng: &mut StreamRng) -> (Arc<[f64]>, f64) {
        let sigma = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let values = self
            .accused
            .iter()
            .map(|&a| if a { 0.0 } else { sigma })
            .collect();
        (values, sigma)
    }
}

/// Final query issued by the analyst.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalQuery {
    pub sigma: f64,
    pub accused: usize,
    pub answer: Option<f64>,
}

impl FinalQuery {
    /// `σ·(1 − |R|/m)`.
    pub fn true_answer(&self, m: usize) -> f64 {
        self.sigma * (1.0 - self.accused as f64 / m as f64)
    }
}

/// Analyst half of the attack: `ℓ̃ − 1` fingerprinting rounds, then the
/// final query.
#[derive(Clone, Debug)]
pub struct FingerprintAnalyst {
    domain: DomainSpec,
    rounds: usize,
    issued: usize,
    state: IfpcState,
    last_query: Option<Arc<[f64]>>,
    final_query: Option<FinalQuery>,
}

impl FingerprintAnalyst {
    pub fn new(n: usize, cfg: &AttackConfig) -> Self {
        let params = cfg.ifpc_params(n);
        Self {
            domain: DomainSpec::index(params.m),
            rounds: cfg.rounds_for(n),
            issued: 0,
            state: IfpcState::new(params),
            last_query: None,
            final_query: None,
        }
    }

    pub fn state(&self) -> &IfpcState {
        &self.state
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn final_query(&self) -> Option<&FinalQuery> {
        self.final_query.as_ref()
    }

    /// Values of the most recent query.
    pub fn last_query(&self) -> Option<&Arc<[f64]>> {
        self.last_query.as_ref()
    }

    /// Next query table, without wrapping it into a [`Query`].
    pub fn next_table(&mut self, rng: &mut StreamRng) -> Arc<[f64]> {
        let values = if self.issued + 1 >= self.rounds {
            let (values, sigma) = self.state.final_query(rng);
            self.final_query = Some(FinalQuery {
                sigma,
                accused: self.state.accused_count(),
                answer: None,
            });
            values
        } else {
            self.state.next_query(rng)
        };
        self.issued += 1;
        self.last_query = Some(values.clone());
        values
    }
}

impl Analyst for FingerprintAnalyst {
    fn next_query(&mut self, rng: &mut StreamRng) -> Result<Query, GameError> {
        let values = self.next_table(rng);
        Ok(Query::raw_table(self.domain, values))
    }

    fn absorb(&mut self, answer: f64) {
        if self.state.has_pending() {
            self.state.process_answer(answer);
        } else if let Some(f) = self.final_query.as_mut() {
            f.answer = Some(answer);
        }
    }
}

/// A finished attack game with the analyst's internal state.
#[derive(Clone, Debug)]
pub struct AttackRun {
    pub record: GameRecord,
    pub m: usize,
    pub accusations: Vec<(usize, usize)>,
    pub final_query: Option<FinalQuery>,
}

impl AttackRun {
    pub fn outcome(&self) -> bool {
        self.record.result.outcome
    }

    /// Whether the final query alone erred by more than `1/10`.
    pub fn final_failed(&self) -> bool {
        self.record
            .result
            .errors
            .last()
            .is_some_and(|&e| e > FAILURE_THRESHOLD)
            && self.final_query.is_some()
    }

    /// Every sample index was accused.
    pub fn contains_sample(&self) -> bool {
        let mut accused = vec![false; self.m];
        for &(j, _) in &self.accusations {
            accused[j] = true;
        }
        self.record.samples.iter().all(|x| accused[x.index()])
    }

    /// Fraction of the sample (with multiplicity) that was accused.
    pub fn sample_coverage(&self) -> f64 {
        let mut accused = vec![false; self.m];
        for &(j, _) in &self.accusations {
            accused[j] = true;
        }
        let hit = self
            .record
            .samples
            .iter()
            .filter(|x| accused[x.index()])
            .count();
        hit as f64 / self.record.samples.len() as f64
    }

    pub fn false_accusations(&self) -> usize {
        let mut in_sample = vec![false; self.m];
        for x in self.record.samples.iter() {
            in_sample[x.index()] = true;
        }
        self.accusations
            .iter()
            .filter(|&&(j, _)| !in_sample[j])
            .count()
    }

    /// Earliest number of scored rounds after which a final query would
    /// fail against the empirical mean of this run's sample.
    pub fn rounds_to_failure(&self) -> Option<usize> {
        rounds_to_failure(&self.accusations, &self.record.samples, self.m)
    }
}

/// Earliest round `r` such that, with the accusations made by round `r`,
/// the final query's empirical answer `σ·u` misses `σ·(1 − |R|/m)` by more
/// than `1/10`, where `u` is the unaccused fraction of the sample.
pub fn rounds_to_failure(
    accusations: &[(usize, usize)],
    samples: &SampleSet,
    m: usize,
) -> Option<usize> {
    let mut mult = vec![0usize; m];
    for x in samples.iter() {
        mult[x.index()] += 1;
    }
    let n = samples.len() as f64;
    let mut accused = 0usize;
    let mut covered = 0usize;
    let mut i = 0;
    while i < accusations.len() {
        let round = accusations[i].1;
        while i < accusations.len() && accusations[i].1 == round {
            accused += 1;
            covered += mult[accusations[i].0];
            i += 1;
        }
        let truth = 1.0 - accused as f64 / m as f64;
        let answer = 1.0 - covered as f64 / n;
        if (truth - answer).abs() > FAILURE_THRESHOLD {
            return Some(round);
        }
    }
    None
}

/// Plays the natural attack against `mechanism`.
pub fn run_natural_attack(
    mechanism: &mut dyn Mechanism,
    n: usize,
    cfg: &AttackConfig,
    seed: u64,
    options: &GameOptions,
) -> Result<AttackRun, GameError> {
    cfg.validate(n)?;
    let mut analyst = FingerprintAnalyst::new(n, cfg);
    let public = PublicInputs {
        n,
        ell: analyst.rounds(),
        domain: DomainSpec::index(cfg.m(n)),
    };
    let mut sampler = TildeSampler { c: cfg.c };
    let record = run_game(
        mechanism,
        &mut sampler,
        &mut analyst,
        &public,
        seed,
        options,
    )?;
    Ok(AttackRun {
        record,
        m: cfg.m(n),
        accusations: analyst.state().accusations().to_vec(),
        final_query: analyst.final_query().cloned(),
    })
}

/// One row of a calibration table.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRow {
    pub kappa: f64,
    pub tau: f64,
    pub final_failure_rate: f64,
    pub containment_rate: f64,
    pub mean_coverage: f64,
    pub mean_false_accusations: f64,
    pub median_rounds_to_failure: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    pub n: usize,
    pub c: usize,
    pub rounds: usize,
    pub rows: Vec<CalibrationRow>,
    pub recommended_kappa: f64,
    pub recommended_tau: f64,
}

/// Runs the attack against the empirical mean for each `κ` in `kappas` and
/// recommends the one whose final query fails most often (ties go to the
/// larger `κ`, which accuses fewer outsiders).
pub fn calibrate(
    n: usize,
    base: &AttackConfig,
    kappas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<CalibrationReport, GameError> {
    if kappas.is_empty() || trials == 0 {
        return Err(GameError::InvalidParameters(
            "calibration needs kappas and trials".into(),
        ));
    }
    let rounds = base.rounds_for(n);
    let mut rows = Vec::new();
    for &kappa in kappas {
        let cfg = AttackConfig {
            kappa,
            tau: None,
            rounds: Some(rounds),
            ..base.clone()
        };
        cfg.validate(n)?;
        let runs = crate::par::map_trials(trials, |t| {
            let mut mech = crate::mechanisms::EmpiricalMean::new();
            let seed = crate::rng::trial_seed(seed, t as u64);
            run_natural_attack(
                &mut mech,
                n,
                &cfg,
                seed,
                &GameOptions {
                    transcript: crate::game::TranscriptMode::DigestOnly,
                    ..GameOptions::default()
                },
            )
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
        let t = trials as f64;
        let mut rtf: Vec<usize> = runs
            .iter()
            .filter_map(AttackRun::rounds_to_failure)
            .collect();
        rtf.sort_unstable();
        rows.push(CalibrationRow {
            kappa,
            tau: cfg.tau_for(n),
            final_failure_rate: runs.iter().filter(|r| r.final_failed()).count() as f64 / t,
            containment_rate: runs.iter().filter(|r| r.contains_sample()).count() as f64 / t,
            mean_coverage: runs.iter().map(AttackRun::sample_coverage).sum::<f64>() / t,
            mean_false_accusations: runs
                .iter()
                .map(|r| r.false_accusations() as f64)
                .sum::<f64>()
                / t,
            median_rounds_to_failure: (rtf.len() * 2 > trials).then(|| rtf[trials / 2]),
        });
    }
    let best = rows
        .iter()
        .max_by(|a, b| {
            a.final_failure_rate
                .total_cmp(&b.final_failure_rate)
                .then(a.kappa.total_cmp(&b.kappa))
        })
        .expect("non-empty");
    Ok(CalibrationReport {
        n,
        c: base.c,
        rounds,
        recommended_kappa: best.kappa,
        recommended_tau: best.tau,
        rows: rows.clone(),
    })
}
