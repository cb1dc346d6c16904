//! The balanced adversary built from identity-based encryption.
//!
//! The sampler draws IBE keys and picks the uniform distribution over the
//! triples `(j, mpk, sk_j)`. The analyst first learns `mpk` bit by bit, then
//! runs the fingerprinting analyst on `[m]`, encrypting each query entry
//! `tq(j)` to identity `j`. A sample point `(j, mpk, sk_j)` can decrypt only
//! its own entry, so every mechanism is pushed towards natural behaviour.
//!
//! [`MTilde`] is the natural mechanism that emulates this game around an
//! arbitrary mechanism; [`TildeVariant::Hybrid`] is its unnatural twin that
//! encrypts the true entries everywhere.

use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::fingerprint::{AttackConfig, FinalQuery, FingerprintAnalyst, TildeSampler};
use crate::game::{
    run_game, Analyst, DomainSpec, Element, FiniteDistribution, GameError, GameOptions, GameRecord,
    GameResult, Mechanism, PublicInputs, Query, QueryForm, SampleSet, Sampler, Triplet,
    FAILURE_THRESHOLD,
};
use crate::ibe::{
    build_scheme, decrypt, BitString, Ciphertext, IbeError, IbeKeyMaterial, IbeMessage, IbeScheme,
    SchemeTag,
};
use crate::rng::{stream, StreamRng};

/// `T = {(j, mpk, sk_j)}` with its key material.
#[derive(Clone, Debug)]
pub struct TripletTable {
    pub keys: IbeKeyMaterial,
    pub triplets: Vec<Element>,
}

impl TripletTable {
    /// Runs setup and keygen for all `m` identities.
    pub fn generate(
        scheme: &dyn IbeScheme,
        m: usize,
        rng: &mut StreamRng,
    ) -> Result<Self, IbeError> {
        let mut keys = scheme.setup(m, rng)?;
        scheme.keygen_all(&mut keys)?;
        let triplets = keys
            .identity_keys
            .iter()
            .map(|(&j, sk)| {
                Element::Triplet(Arc::new(Triplet {
                    j: j as u32,
                    mpk: keys.mpk.clone(),
                    sk: sk.clone(),
                }))
            })
            .collect();
        Ok(Self { keys, triplets })
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec::triplet(self.keys.m, self.keys.key_bits())
    }

    /// `U_T`.
    pub fn distribution(&self) -> Result<FiniteDistribution, GameError> {
        FiniteDistribution::uniform(self.domain(), self.triplets.clone())
    }

    /// Sample for an index multiset `J`.
    pub fn samples_for(&self, indices: &[usize]) -> SampleSet {
        SampleSet::new(indices.iter().map(|&j| self.triplets[j].clone()).collect())
    }
}

/// Runs the sampler by hand: keys, table and `n` uniform draws.
pub fn a1_run(
    n: usize,
    c: usize,
    scheme: &dyn IbeScheme,
    rng: &mut StreamRng,
) -> Result<(TripletTable, SampleSet), GameError> {
    let table = TripletTable::generate(scheme, c * n, rng)?;
    let dist = table.distribution()?;
    let samples = dist.sample_n(n, rng);
    Ok((table, samples))
}

/// Out-of-band copy of the sampler's keys. Only the white-box test
/// mechanism reads it.
pub type KeyLeak = Arc<Mutex<Option<IbeKeyMaterial>>>;

/// Sampler half. Transmits nothing to the analyst.
#[derive(Debug)]
pub struct BalancedSampler {
    scheme: Arc<dyn IbeScheme>,
    leak: Option<KeyLeak>,
}

impl BalancedSampler {
    pub fn new(scheme: Arc<dyn IbeScheme>) -> Self {
        Self { scheme, leak: None }
    }

    /// Also publishes the keys to `leak` (negative tests only).
    pub fn leaking(scheme: Arc<dyn IbeScheme>, leak: KeyLeak) -> Self {
        Self {
            scheme,
            leak: Some(leak),
        }
    }
}

impl Sampler for BalancedSampler {
    fn choose(
        &mut self,
        public: &PublicInputs,
        rng: &mut StreamRng,
    ) -> Result<FiniteDistribution, GameError> {
        let table = TripletTable::generate(self.scheme.as_ref(), public.domain.m(), rng)?;
        if let Some(leak) = &self.leak {
            *leak.lock().expect("leak lock") = Some(table.keys.clone());
        }
        table.distribution()
    }
}

/// Analyst half, wrapping a natural-domain analyst (by default the
/// fingerprinting analyst).
#[derive(Debug)]
pub struct BalancedAnalyst<A = FingerprintAnalyst> {
    scheme: Arc<dyn IbeScheme>,
    domain: DomainSpec,
    inner: A,
    round: usize,
    recovered: BitString,
    inner_means: Vec<f64>,
    last_inner: Option<Arc<[f64]>>,
    encryption_failures: usize,
}

impl<A: Analyst> BalancedAnalyst<A> {
    /// `domain` must be the public triplet domain `(m, k)` with `k` the
    /// scheme's master-key length for `m` identities.
    pub fn new(
        scheme: Arc<dyn IbeScheme>,
        domain: DomainSpec,
        inner: A,
    ) -> Result<Self, GameError> {
        let DomainSpec::Triplet { m, key_bits } = domain else {
            return Err(GameError::InvalidParameters(format!(
                "balanced analyst needs a triplet domain, got {domain}"
            )));
        };
        if scheme.mpk_bits(m) != key_bits {
            return Err(GameError::InvalidParameters(format!(
                "scheme has {}-bit master keys for {m} identities, domain says {key_bits}",
                scheme.mpk_bits(m)
            )));
        }
        Ok(Self {
            scheme,
            domain,
            inner,
            round: 0,
            recovered: BitString::zeros(key_bits),
            inner_means: Vec::new(),
            last_inner: None,
            encryption_failures: 0,
        })
    }

    pub fn key_bits(&self) -> usize {
        self.recovered.len()
    }

    pub fn in_mpk_phase(&self) -> bool {
        self.round < self.key_bits()
    }

    pub fn recovered_mpk(&self) -> &BitString {
        &self.recovered
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    /// `(1/m)·Σ_j tq(j)` for every wrapped query so far.
    pub fn inner_means(&self) -> &[f64] {
        &self.inner_means
    }

    pub fn last_inner_query(&self) -> Option<&Arc<[f64]>> {
        self.last_inner.as_ref()
    }

    /// Wrapped rounds where encryption under the recovered key was refused.
    pub fn encryption_failures(&self) -> usize {
        self.encryption_failures
    }

    fn wrap(&mut self, values: &[f64], rng: &mut StreamRng) -> Result<Vec<Ciphertext>, GameError> {
        let msgs = values
            .iter()
            .map(|&v| {
                IbeMessage::from_f64(v).ok_or_else(|| {
                    GameError::Other(format!("inner query value {v} is not in {{-1, 0, 1}}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        match self.scheme.encrypt_all(&self.recovered, &msgs, rng) {
            Ok(cts) => Ok(cts),
            Err(_) => {
                self.encryption_failures += 1;
                Ok(msgs
                    .iter()
                    .enumerate()
                    .map(|(j, &msg)| {
                        self.scheme
                            .encrypt(&self.recovered, j, msg, rng)
                            .unwrap_or_else(|_| Ciphertext::unbound(j, rng))
                    })
                    .collect())
            }
        }
    }
}

impl<A: Analyst> Analyst for BalancedAnalyst<A> {
    fn next_query(&mut self, rng: &mut StreamRng) -> Result<Query, GameError> {
        if self.in_mpk_phase() {
            return Ok(Query::bit_projection(self.domain, self.round)?);
        }
        let inner = self.inner.next_query(rng)?;
        let QueryForm::Table(values) = inner.form else {
            return Err(GameError::Other(
                "inner analyst must ask table queries".into(),
            ));
        };
        if values.len() != self.domain.m() {
            return Err(GameError::Other("inner query has the wrong length".into()));
        }
        let cts = self.wrap(&values, rng)?;
        self.inner_means
            .push(values.iter().sum::<f64>() / values.len() as f64);
        self.last_inner = Some(values);
        Ok(Query::bundle(self.domain, cts)?)
    }

    fn absorb(&mut self, answer: f64) {
        if self.in_mpk_phase() {
            self.recovered.set(self.round, answer > 0.5);
        } else {
            self.inner.absorb(answer);
        }
        self.round += 1;
    }
}

/// Parameters of a balanced-attack game.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedConfig {
    pub scheme: SchemeTag,
    pub lambda: usize,
    pub attack: AttackConfig,
}

impl BalancedConfig {
    pub fn new(scheme: SchemeTag, lambda: usize, attack: AttackConfig) -> Self {
        Self {
            scheme,
            lambda,
            attack,
        }
    }

    /// Public inputs `(n, ℓ̃ + k, [m] × {0,1}^{2k})` for a scheme instance.
    pub fn public_inputs(&self, n: usize, scheme: &dyn IbeScheme) -> PublicInputs {
        let m = self.attack.m(n);
        let k = scheme.mpk_bits(m);
        PublicInputs {
            n,
            ell: self.attack.rounds_for(n) + k,
            domain: DomainSpec::triplet(m, k),
        }
    }
}

/// A finished balanced-attack game.
#[derive(Clone, Debug)]
pub struct BalancedRun {
    pub record: GameRecord,
    pub m: usize,
    pub k: usize,
    /// All mpk-phase answers were within `1/10` (event `E`).
    pub mpk_phase_accurate: bool,
    pub mpk_recovered: bool,
    pub inner_means: Vec<f64>,
    pub last_inner_query: Option<Arc<[f64]>>,
    pub encryption_failures: usize,
    pub accusations: Vec<(usize, usize)>,
    pub final_query: Option<FinalQuery>,
}

impl BalancedRun {
    pub fn outcome(&self) -> bool {
        self.record.result.outcome
    }

    /// True answers of the wrapped rounds.
    pub fn wrapped_true_answers(&self) -> &[f64] {
        &self.record.result.true_answers[self.k.min(self.record.result.true_answers.len())..]
    }

    pub fn final_failed(&self) -> bool {
        self.final_query.is_some()
            && self
                .record
                .result
                .errors
                .last()
                .is_some_and(|&e| e > FAILURE_THRESHOLD)
    }
}

/// Plays the balanced attack (`A₁`, `A₂`) against `mechanism`.
pub fn run_balanced_attack(
    mechanism: &mut dyn Mechanism,
    n: usize,
    cfg: &BalancedConfig,
    seed: u64,
    options: &GameOptions,
) -> Result<BalancedRun, GameError> {
    run_balanced_attack_with(mechanism, n, cfg, seed, options, None)
}

/// As [`run_balanced_attack`], optionally leaking the keys to `leak`.
pub fn run_balanced_attack_with(
    mechanism: &mut dyn Mechanism,
    n: usize,
    cfg: &BalancedConfig,
    seed: u64,
    options: &GameOptions,
    leak: Option<KeyLeak>,
) -> Result<BalancedRun, GameError> {
    cfg.attack.validate(n)?;
    let scheme = build_scheme(cfg.scheme, cfg.lambda)?;
    let public = cfg.public_inputs(n, scheme.as_ref());
    let mut analyst = BalancedAnalyst::new(
        scheme.clone(),
        public.domain,
        FingerprintAnalyst::new(n, &cfg.attack),
    )?;
    let mut sampler = match leak {
        Some(l) => BalancedSampler::leaking(scheme.clone(), l),
        None => BalancedSampler::new(scheme.clone()),
    };
    let record = run_game(
        mechanism,
        &mut sampler,
        &mut analyst,
        &public,
        seed,
        options,
    )?;
    let k = analyst.key_bits();
    let true_mpk = match record.distribution.support().first() {
        Some(Element::Triplet(t)) => Some(t.mpk.clone()),
        _ => None,
    };
    let errors = &record.result.errors;
    Ok(BalancedRun {
        mpk_phase_accurate: errors.len() >= k
            && errors[..k].iter().all(|&e| e <= FAILURE_THRESHOLD),
        mpk_recovered: true_mpk.as_deref() == Some(analyst.recovered_mpk()),
        m: public.domain.m(),
        k,
        inner_means: analyst.inner_means().to_vec(),
        last_inner_query: analyst.last_inner_query().cloned(),
        encryption_failures: analyst.encryption_failures(),
        accusations: analyst.inner().state().accusations().to_vec(),
        final_query: analyst.inner().final_query().cloned(),
        record,
    })
}

/// Which ciphertexts `M̃` sends for identities outside its sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TildeVariant {
    /// Encryptions of 0: the natural mechanism.
    Real,
    /// Encryptions of the true entries.
    Hybrid,
}

/// Per-run diagnostics of `M̃`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TildeDiagnostics {
    pub mpk_answers: Vec<f64>,
    /// All emulated mpk-phase answers within `1/10` (event `E′`).
    pub mpk_phase_accurate: bool,
    /// `q_{i+k}(U_T)` of every wrapped query (when tracking is on).
    pub wrapped_true: Vec<f64>,
    /// `tq_i(U_[m])` of every inner query.
    pub inner_true: Vec<f64>,
}

/// Natural mechanism that emulates the balanced game around `inner`. It
/// plays the natural game over `[m]`.
pub struct MTilde {
    scheme: Arc<dyn IbeScheme>,
    variant: TildeVariant,
    m: usize,
    inner: Box<dyn Mechanism + Send>,
    track_true: bool,
    state: Option<TildeState>,
    pub diagnostics: TildeDiagnostics,
}

struct TildeState {
    table: TripletTable,
    in_sample: Vec<bool>,
    enc_rng: StreamRng,
    inner_rng: StreamRng,
    true_dist: Option<FiniteDistribution>,
}

impl MTilde {
    pub fn new(
        scheme: Arc<dyn IbeScheme>,
        variant: TildeVariant,
        m: usize,
        inner: Box<dyn Mechanism + Send>,
    ) -> Self {
        Self {
            scheme,
            variant,
            m,
            inner,
            track_true: false,
            state: None,
            diagnostics: TildeDiagnostics::default(),
        }
    }

    /// Also compute `q_{i+k}(U_T)` each round (costs `m` decryptions).
    pub fn tracking_true_answers(mut self) -> Self {
        self.track_true = true;
        self
    }

    pub fn key_bits(&self) -> usize {
        self.scheme.mpk_bits(self.m)
    }

    pub fn domain(&self) -> DomainSpec {
        DomainSpec::triplet(self.m, self.key_bits())
    }
}

impl Mechanism for MTilde {
    fn name(&self) -> String {
        let v = match self.variant {
            TildeVariant::Real => "real",
            TildeVariant::Hybrid => "hybrid",
        };
        format!("m-tilde[{v}]({})", self.inner.name())
    }

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        let indices = samples.indices();
        if indices.iter().any(|&j| j >= self.m) {
            return Err(GameError::Other(
                "m-tilde received an index outside [m]".into(),
            ));
        }
        let mut setup_rng = stream(rng.random(), "m-tilde/setup");
        let enc_rng = stream(rng.random(), "m-tilde/encrypt");
        let mut inner_rng = stream(rng.random(), "m-tilde/inner");

        let table = TripletTable::generate(self.scheme.as_ref(), self.m, &mut setup_rng)?;
        let dist = table.distribution()?;
        self.inner
            .receive_samples(&table.samples_for(&indices), &mut inner_rng)?;

        // Emulated mpk phase of the analyst against the inner mechanism.
        let domain = table.domain();
        let k = table.keys.key_bits();
        let mut accurate = true;
        self.diagnostics = TildeDiagnostics::default();
        for i in 0..k {
            let q = Query::bit_projection(domain, i)?;
            let y = self.inner.answer(&q, &mut inner_rng)?.clamp(-1.0, 1.0);
            let truth = if table.keys.mpk.get(i) { 1.0 } else { 0.0 };
            accurate &= (y - truth).abs() <= FAILURE_THRESHOLD;
            self.diagnostics.mpk_answers.push(y);
        }
        self.diagnostics.mpk_phase_accurate = accurate;

        let mut in_sample = vec![false; self.m];
        for j in indices {
            in_sample[j] = true;
        }
        self.state = Some(TildeState {
            table,
            in_sample,
            enc_rng,
            inner_rng,
            true_dist: self.track_true.then_some(dist),
        });
        Ok(())
    }

    fn answer(&mut self, query: &Query, _rng: &mut StreamRng) -> Result<f64, GameError> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| GameError::Other("m-tilde has no sample yet".into()))?;
        let values = query
            .table_values()
            .ok_or_else(|| GameError::Other("m-tilde answers table queries only".into()))?;
        if values.len() != self.m {
            return Err(GameError::Other("query length differs from m".into()));
        }
        let msgs = values
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let v = match self.variant {
                    TildeVariant::Real if !state.in_sample[j] => 0.0,
                    _ => v,
                };
                IbeMessage::from_f64(v)
                    .ok_or_else(|| GameError::Other(format!("query value {v} is not ternary")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cts = self
            .scheme
            .encrypt_all(&state.table.keys.mpk, &msgs, &mut state.enc_rng)?;
        let wrapped = Query::bundle(state.table.domain(), cts)?;
        if let Some(dist) = &state.true_dist {
            self.diagnostics
                .wrapped_true
                .push(dist.true_answer(&wrapped)?);
        }
        self.diagnostics
            .inner_true
            .push(values.iter().sum::<f64>() / self.m as f64);
        self.inner.answer(&wrapped, &mut state.inner_rng)
    }
}

/// Result of the natural game between the fingerprinting adversary and `M̃`.
#[derive(Clone, Debug)]
pub struct TildeRun {
    pub result: GameResult,
    pub transcript: crate::game::Transcript,
    pub diagnostics: TildeDiagnostics,
}

/// Plays the natural game `(Ã₁, Ã₂)` against `M̃` wrapping `inner`.
pub fn m_tilde_run(
    inner: Box<dyn Mechanism + Send>,
    variant: TildeVariant,
    n: usize,
    cfg: &BalancedConfig,
    track_true: bool,
    seed: u64,
    options: &GameOptions,
) -> Result<TildeRun, GameError> {
    cfg.attack.validate(n)?;
    let scheme = build_scheme(cfg.scheme, cfg.lambda)?;
    let m = cfg.attack.m(n);
    let mut tilde = MTilde::new(scheme, variant, m, inner);
    if track_true {
        tilde = tilde.tracking_true_answers();
    }
    let mut analyst = FingerprintAnalyst::new(n, &cfg.attack);
    let public = PublicInputs {
        n,
        ell: analyst.rounds(),
        domain: DomainSpec::index(m),
    };
    let mut sampler = TildeSampler { c: cfg.attack.c };
    let record = run_game(
        &mut tilde,
        &mut sampler,
        &mut analyst,
        &public,
        seed,
        options,
    )?;
    Ok(TildeRun {
        result: record.result,
        transcript: record.transcript,
        diagnostics: tilde.diagnostics,
    })
}

/// White-box mechanism handed the sampler's keys out of band. It decrypts
/// every entry and answers the exact population value.
pub struct KeyHolder {
    leak: KeyLeak,
    keys: Option<IbeKeyMaterial>,
    samples: SampleSet,
}

impl KeyHolder {
    pub fn new(leak: KeyLeak) -> Self {
        Self {
            leak,
            keys: None,
            samples: SampleSet::default(),
        }
    }
}

impl Mechanism for KeyHolder {
    fn name(&self) -> String {
        "key-holder".into()
    }

    fn receive_samples(
        &mut self,
        samples: &SampleSet,
        _rng: &mut StreamRng,
    ) -> Result<(), GameError> {
        self.samples = samples.clone();
        self.keys = self.leak.lock().expect("leak lock").clone();
        Ok(())
    }

    fn answer(&mut self, query: &Query, _rng: &mut StreamRng) -> Result<f64, GameError> {
        let Some(keys) = &self.keys else {
            return Ok(crate::mechanisms::empirical_answer(&self.samples, query)?);
        };
        match &query.form {
            QueryForm::BitProjection(i) => Ok(if keys.mpk.get(*i) { 1.0 } else { 0.0 }),
            QueryForm::CiphertextBundle(cts) => {
                let sum: f64 = cts
                    .iter()
                    .enumerate()
                    .map(|(j, ct)| {
                        keys.identity_keys
                            .get(&j)
                            .and_then(|sk| decrypt(sk, ct).ok())
                            .map_or(0.0, |msg| f64::from(msg.value()))
                    })
                    .sum();
                Ok(sum / cts.len() as f64)
            }
            QueryForm::Table(_) => Ok(crate::mechanisms::empirical_answer(&self.samples, query)?),
        }
    }
}
