//! The IND-IBE indistinguishability experiment and a few stock adversaries.

use rand::Rng;

use super::{decrypt, BitString, Ciphertext, IbeError, IbeKeyMaterial, IbeMessage, IbeScheme};
use crate::rng::{stream, StreamRng};

/// What the adversary commits to at the end of its first phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Challenge {
    pub id_star: usize,
    pub m0: Vec<IbeMessage>,
    pub m1: Vec<IbeMessage>,
}

/// KeyGen oracle handed to the adversary. Refuses the challenge identity
/// unless the adversary is declared rule-exempt (negative tests only).
pub struct KeyOracle<'a> {
    scheme: &'a dyn IbeScheme,
    keys: &'a IbeKeyMaterial,
    forbidden: Option<usize>,
    exempt: bool,
    queried: Vec<usize>,
}

impl<'a> KeyOracle<'a> {
    pub fn keygen(&mut self, id: usize) -> Result<BitString, IbeError> {
        if self.forbidden == Some(id) && !self.exempt {
            return Err(IbeError::RuleViolation(format!(
                "KeyGen queried on challenge identity {id}"
            )));
        }
        self.queried.push(id);
        self.scheme.keygen(self.keys, id)
    }

    pub fn queried(&self) -> &[usize] {
        &self.queried
    }
}

pub trait IndAdversary {
    fn choose(
        &mut self,
        mpk: &BitString,
        m: usize,
        k_msgs: usize,
        oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<Challenge, IbeError>;

    fn guess(
        &mut self,
        mpk: &BitString,
        challenge: &[Ciphertext],
        oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<bool, IbeError>;

    /// Only the deliberately rule-breaking test adversary returns `true`.
    fn rule_exempt(&self) -> bool {
        false
    }
}

/// Result of one experiment run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndRun {
    pub b: bool,
    pub guess: bool,
}

impl IndRun {
    pub fn won(&self) -> bool {
        self.b == self.guess
    }
}

/// One run of IND-IBE with `m` identities and `k_msgs`-long message vectors.
/// Returns `1` (true) when the adversary guesses the hidden bit.
pub fn ind_ibe_experiment(
    scheme: &dyn IbeScheme,
    adversary: &mut dyn IndAdversary,
    m: usize,
    k_msgs: usize,
    seed: u64,
) -> Result<bool, IbeError> {
    run_ind_ibe(scheme, adversary, m, k_msgs, seed, None).map(|r| r.won())
}

/// Like [`ind_ibe_experiment`] but with an optional forced challenge bit,
/// which lets tests replay the same run under both bits.
pub fn run_ind_ibe(
    scheme: &dyn IbeScheme,
    adversary: &mut dyn IndAdversary,
    m: usize,
    k_msgs: usize,
    seed: u64,
    force_b: Option<bool>,
) -> Result<IndRun, IbeError> {
    let mut challenger = stream(seed, "ind-ibe/challenger");
    let mut adv_rng = stream(seed, "ind-ibe/adversary");
    let exempt = adversary.rule_exempt();

    let keys = scheme.setup(m, &mut challenger)?;
    let mut oracle = KeyOracle {
        scheme,
        keys: &keys,
        forbidden: None,
        exempt,
        queried: Vec::new(),
    };
    let challenge = adversary.choose(&keys.mpk, m, k_msgs, &mut oracle, &mut adv_rng)?;
    keys.check_id(challenge.id_star)?;
    if challenge.m0.len() != k_msgs || challenge.m1.len() != k_msgs {
        return Err(IbeError::RuleViolation(format!(
            "message vectors must both have length {k_msgs}, got {} and {}",
            challenge.m0.len(),
            challenge.m1.len()
        )));
    }
    if !exempt && oracle.queried.contains(&challenge.id_star) {
        return Err(IbeError::RuleViolation(format!(
            "KeyGen was queried on challenge identity {} before the challenge",
            challenge.id_star
        )));
    }
    oracle.forbidden = Some(challenge.id_star);

    let b = force_b.unwrap_or_else(|| challenger.random());
    let msgs = if b { &challenge.m1 } else { &challenge.m0 };
    let cts = msgs
        .iter()
        .map(|&msg| scheme.encrypt(&keys.mpk, challenge.id_star, msg, &mut challenger))
        .collect::<Result<Vec<_>, _>>()?;
    let guess = adversary.guess(&keys.mpk, &cts, &mut oracle, &mut adv_rng)?;
    Ok(IndRun { b, guess })
}

fn distinct_vectors(k: usize) -> (Vec<IbeMessage>, Vec<IbeMessage>) {
    (vec![IbeMessage::NEG; k], vec![IbeMessage::POS; k])
}

/// Ignores everything and flips a coin.
#[derive(Debug, Default)]
pub struct RandomGuess;

impl IndAdversary for RandomGuess {
    fn choose(
        &mut self,
        _mpk: &BitString,
        m: usize,
        k_msgs: usize,
        _oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<Challenge, IbeError> {
        let (m0, m1) = distinct_vectors(k_msgs);
        Ok(Challenge {
            id_star: rng.random_range(0..m),
            m0,
            m1,
        })
    }

    fn guess(
        &mut self,
        _mpk: &BitString,
        _challenge: &[Ciphertext],
        _oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<bool, IbeError> {
        Ok(rng.random())
    }
}

/// Breaks the rules: asks KeyGen for the challenge identity and decrypts.
/// Exists to show the experiment is winnable with the forbidden key.
#[derive(Debug, Default)]
pub struct KeyAbuser {
    challenge: Option<Challenge>,
}

impl IndAdversary for KeyAbuser {
    fn choose(
        &mut self,
        _mpk: &BitString,
        m: usize,
        k_msgs: usize,
        _oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<Challenge, IbeError> {
        let (m0, m1) = distinct_vectors(k_msgs);
        let c = Challenge {
            id_star: rng.random_range(0..m),
            m0,
            m1,
        };
        self.challenge = Some(c.clone());
        Ok(c)
    }

    fn guess(
        &mut self,
        _mpk: &BitString,
        challenge: &[Ciphertext],
        oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<bool, IbeError> {
        let c = self.challenge.as_ref().expect("choose runs before guess");
        let sk = oracle.keygen(c.id_star)?;
        Ok(match challenge.first().map(|ct| decrypt(&sk, ct)) {
            Some(Ok(msg)) => msg == c.m1[0],
            _ => rng.random(),
        })
    }

    fn rule_exempt(&self) -> bool {
        true
    }
}

/// Heuristic distinguisher that stays within the rules: it obtains the key
/// of a neighbouring identity, tries it on the challenge, and otherwise
/// votes on the low payload bit against the encoding of `m1`.
#[derive(Debug, Default)]
pub struct NeighbourKeyDistinguisher {
    challenge: Option<Challenge>,
}

impl IndAdversary for NeighbourKeyDistinguisher {
    fn choose(
        &mut self,
        _mpk: &BitString,
        m: usize,
        k_msgs: usize,
        _oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<Challenge, IbeError> {
        let (m0, m1) = distinct_vectors(k_msgs);
        let c = Challenge {
            id_star: rng.random_range(0..m),
            m0,
            m1,
        };
        self.challenge = Some(c.clone());
        Ok(c)
    }

    fn guess(
        &mut self,
        mpk: &BitString,
        challenge: &[Ciphertext],
        oracle: &mut KeyOracle<'_>,
        rng: &mut StreamRng,
    ) -> Result<bool, IbeError> {
        let c = self.challenge.as_ref().expect("choose runs before guess");
        let _ = mpk;
        let m = oracle.keys.m;
        if m > 1 {
            let neighbour = (c.id_star + 1) % m;
            let sk = oracle.keygen(neighbour)?;
            if let Some(Ok(msg)) = challenge.first().map(|ct| decrypt(&sk, ct)) {
                return Ok(msg == c.m1[0]);
            }
        }
        let target = c.m1[0].encode() & 1;
        let votes = challenge
            .iter()
            .filter(|ct| match ct.body {
                super::CtBody::Compact { payload, .. } | super::CtBody::ElGamal { payload, .. } => {
                    payload & 1 == target
                }
                super::CtBody::Unbound { .. } => false,
            })
            .count();
        Ok(match (2 * votes).cmp(&challenge.len()) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.random(),
        })
    }
}

/// Win rate of an adversary over `trials` seeded runs.
pub fn ind_win_rate<A: IndAdversary>(
    scheme_factory: impl Fn() -> Box<dyn IbeScheme>,
    mut adversary: impl FnMut() -> A,
    m: usize,
    k_msgs: usize,
    trials: usize,
    master_seed: u64,
) -> Result<f64, IbeError> {
    let mut wins = 0usize;
    for t in 0..trials {
        let scheme = scheme_factory();
        let mut adv = adversary();
        let seed = crate::rng::trial_seed(master_seed, t as u64);
        if ind_ibe_experiment(scheme.as_ref(), &mut adv, m, k_msgs, seed)? {
            wins += 1;
        }
    }
    Ok(wins as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::{CompactIbe, TrivialIbe};

    fn compact() -> Box<dyn IbeScheme> {
        Box::new(CompactIbe::new(16).unwrap())
    }

    #[test]
    fn random_guess_wins_half() {
        let rate = ind_win_rate(compact, || RandomGuess, 8, 2, 10_000, 11).unwrap();
        assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn key_abuser_always_wins() {
        let rate = ind_win_rate(compact, KeyAbuser::default, 8, 3, 500, 12).unwrap();
        assert_eq!(rate, 1.0);
        let trivial = || Box::new(TrivialIbe::new(16).unwrap()) as Box<dyn IbeScheme>;
        assert_eq!(
            ind_win_rate(trivial, KeyAbuser::default, 8, 1, 200, 13).unwrap(),
            1.0
        );
    }

    #[test]
    fn rule_following_distinguisher_has_no_edge() {
        let rate = ind_win_rate(
            compact,
            NeighbourKeyDistinguisher::default,
            8,
            4,
            10_000,
            14,
        )
        .unwrap();
        assert!(rate <= 0.55, "rate {rate}");
    }

    /// Asks for the forbidden key without being exempt.
    struct Cheater;
    impl IndAdversary for Cheater {
        fn choose(
            &mut self,
            _: &BitString,
            _: usize,
            k: usize,
            _: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<Challenge, IbeError> {
            let (m0, m1) = distinct_vectors(k);
            Ok(Challenge { id_star: 0, m0, m1 })
        }
        fn guess(
            &mut self,
            _: &BitString,
            _: &[Ciphertext],
            oracle: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<bool, IbeError> {
            oracle.keygen(0).map(|_| true)
        }
    }

    /// Queries the identity it later picks as challenge.
    struct EarlyCheater;
    impl IndAdversary for EarlyCheater {
        fn choose(
            &mut self,
            _: &BitString,
            _: usize,
            k: usize,
            oracle: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<Challenge, IbeError> {
            oracle.keygen(2)?;
            let (m0, m1) = distinct_vectors(k);
            Ok(Challenge { id_star: 2, m0, m1 })
        }
        fn guess(
            &mut self,
            _: &BitString,
            _: &[Ciphertext],
            _: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<bool, IbeError> {
            Ok(true)
        }
    }

    /// Commits to message vectors of unequal length.
    struct Lopsided;
    impl IndAdversary for Lopsided {
        fn choose(
            &mut self,
            _: &BitString,
            _: usize,
            _: usize,
            _: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<Challenge, IbeError> {
            Ok(Challenge {
                id_star: 0,
                m0: vec![IbeMessage::ZERO],
                m1: vec![IbeMessage::ZERO, IbeMessage::POS],
            })
        }
        fn guess(
            &mut self,
            _: &BitString,
            _: &[Ciphertext],
            _: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<bool, IbeError> {
            Ok(true)
        }
    }

    #[test]
    fn violations_abort() {
        let s = CompactIbe::new(16).unwrap();
        for adv in [
            &mut Cheater as &mut dyn IndAdversary,
            &mut EarlyCheater,
            &mut Lopsided,
        ] {
            assert!(matches!(
                ind_ibe_experiment(&s, adv, 4, 1, 1),
                Err(IbeError::RuleViolation(_))
            ));
        }
    }

    /// Records everything it sees before the challenge ciphertexts arrive.
    #[derive(Default)]
    struct Recorder {
        view: Vec<Vec<u8>>,
    }
    impl IndAdversary for Recorder {
        fn choose(
            &mut self,
            mpk: &BitString,
            m: usize,
            k: usize,
            oracle: &mut KeyOracle<'_>,
            rng: &mut StreamRng,
        ) -> Result<Challenge, IbeError> {
            self.view.push(mpk.as_bytes().to_vec());
            for id in 1..m {
                self.view.push(oracle.keygen(id)?.as_bytes().to_vec());
            }
            let coin: u64 = rng.random();
            self.view.push(coin.to_le_bytes().to_vec());
            let (m0, m1) = distinct_vectors(k);
            Ok(Challenge { id_star: 0, m0, m1 })
        }
        fn guess(
            &mut self,
            _: &BitString,
            _: &[Ciphertext],
            oracle: &mut KeyOracle<'_>,
            _: &mut StreamRng,
        ) -> Result<bool, IbeError> {
            self.view.push(oracle.keygen(1)?.as_bytes().to_vec());
            Ok(false)
        }
    }

    #[test]
    fn view_before_challenge_is_independent_of_b() {
        for seed in 0..20 {
            let s = CompactIbe::new(16).unwrap();
            let mut r0 = Recorder::default();
            let mut r1 = Recorder::default();
            run_ind_ibe(&s, &mut r0, 6, 2, seed, Some(false)).unwrap();
            let s = CompactIbe::new(16).unwrap();
            run_ind_ibe(&s, &mut r1, 6, 2, seed, Some(true)).unwrap();
            assert_eq!(r0.view, r1.view);
        }
    }
}
