use std::fmt::Display;
use std::time::Instant;

use rand::Rng;

use super::config::{ExperimentConfig, ExperimentKind};
use super::stats::median;
use super::{HarnessError, TrialSummary};
use crate::balanced::{run_balanced_attack, BalancedConfig};
use crate::fingerprint::{run_natural_attack, AttackConfig, AttackRun};
use crate::game::{GameOptions, GameResult, SampleSet, TranscriptMode};
use crate::ibe::{build_scheme, decrypt, identity_bits, IbeMessage, IbeScheme, SchemeTag};
use crate::key_agreement::eavesdrop::{
    eavesdropper_gap, Eavesdropper, LastAnswerEcho, MeanOfAnswers, OutOfBand,
};
use crate::key_agreement::{
    balanced_approx_agreement, gl_decode, run_weak_ka, BalancedApprox, Bucketing, NoisyOracle,
    SecondSample,
};
use crate::mechanisms::MechanismSpec;
use crate::par::{map_trials, with_workers};
use crate::rng::{stream, trial_seed};

/// CSV columns per experiment kind. Every schema ends with `error`, which
/// is empty unless the trial aborted.
pub fn schema(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::NaturalAttack => &[
            "trial",
            "seed",
            "mechanism",
            "n",
            "m",
            "ell",
            "failed",
            "first_failure_round",
            "max_error",
            "final_failed",
            "final_error",
            "accused",
            "false_accusations",
            "sample_coverage",
            "rounds_to_failure",
            "error",
        ],
        ExperimentKind::BalancedAttack => &[
            "trial",
            "seed",
            "mechanism",
            "n",
            "m",
            "k",
            "ell",
            "failed",
            "first_failure_round",
            "max_error",
            "final_failed",
            "final_error",
            "mpk_phase_accurate",
            "mpk_recovered",
            "wrapped_exact",
            "encryption_failures",
            "accused",
            "sample_coverage",
            "error",
        ],
        ExperimentKind::DpBaseline => &[
            "trial",
            "seed",
            "sigma",
            "gaussian_failed",
            "gaussian_first_failure",
            "gaussian_max_error",
            "gaussian_final_failed",
            "empirical_failed",
            "empirical_first_failure",
            "empirical_max_error",
            "empirical_final_failed",
            "error",
        ],
        ExperimentKind::ApproxAgreement => &[
            "trial",
            "seed",
            "o1",
            "o2",
            "hidden_true",
            "agree",
            "last_answer_guess",
            "last_answer_hit",
            "mean_guess",
            "mean_hit",
            "error",
        ],
        ExperimentKind::WeakKa => &["trial", "o1", "o2", "agree_bit", "best_G_error", "error"],
        ExperimentKind::GlDecode => &["trial", "seed", "x", "decoded", "recovered", "error"],
        ExperimentKind::IbeSelftest => &[
            "trial", "seed", "scheme", "check", "passed", "detail", "error",
        ],
    }
}

/// Runs the configured batch. Trial errors are recorded per row; only
/// configuration problems abort.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut s = with_workers(cfg.workers, || match cfg.kind {
        ExperimentKind::NaturalAttack => natural(cfg),
        ExperimentKind::BalancedAttack => balanced(cfg),
        ExperimentKind::DpBaseline => dp_baseline(cfg),
        ExperimentKind::ApproxAgreement => approx(cfg),
        ExperimentKind::WeakKa => weak_ka(cfg),
        ExperimentKind::GlDecode => gl(cfg),
        ExperimentKind::IbeSelftest => ibe_selftest(cfg),
    })?;
    s.wall_clock = start.elapsed();
    Ok(s)
}

fn v<T: Display>(x: T) -> String {
    x.to_string()
}

fn opt<T: Display>(x: Option<T>) -> String {
    x.map(|x| x.to_string()).unwrap_or_default()
}

fn error_row(kind: ExperimentKind, trial: usize, seed: u64, err: &str) -> Vec<String> {
    let cols = schema(kind);
    let mut row = vec![String::new(); cols.len()];
    row[0] = trial.to_string();
    if cols[1] == "seed" {
        row[1] = seed.to_string();
    }
    row[cols.len() - 1] = err.to_string();
    row
}

struct Trial<T> {
    index: usize,
    seed: u64,
    result: Result<T, String>,
}

fn batch<T, F>(cfg: &ExperimentConfig, f: F) -> Vec<Trial<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T, HarnessError> + Sync + Send,
{
    map_trials(cfg.trials(), |i| {
        let seed = trial_seed(cfg.seed, i as u64);
        Trial {
            index: i,
            seed,
            result: f(seed).map_err(|e| e.to_string()),
        }
    })
}

fn summary(cfg: &ExperimentConfig) -> TrialSummary {
    TrialSummary {
        kind: cfg.kind,
        trials: cfg.trials(),
        successes: 0,
        errored: 0,
        header: schema(cfg.kind).to_vec(),
        rows: Vec::new(),
        metrics: Vec::new(),
        wall_clock: Default::default(),
    }
}

fn frac(count: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        count as f64 / total as f64
    }
}

fn attack_config(cfg: &ExperimentConfig) -> AttackConfig {
    let mut a = AttackConfig::with_c(cfg.c());
    a.rounds = cfg.ell();
    if let Some(k) = cfg.kappa {
        a.kappa = k;
    }
    a
}

fn options(cfg: &ExperimentConfig) -> GameOptions {
    GameOptions {
        allow_oracle: cfg.allow_oracle,
        transcript: TranscriptMode::DigestOnly,
        stop_at_first_failure: false,
    }
}

fn coverage(accusations: &[(usize, usize)], samples: &SampleSet, m: usize) -> f64 {
    let mut accused = vec![false; m];
    for &(j, _) in accusations {
        accused[j] = true;
    }
    samples.iter().filter(|x| accused[x.index()]).count() as f64 / samples.len().max(1) as f64
}

fn final_error(r: &GameResult) -> f64 {
    r.errors.last().copied().unwrap_or(f64::NAN)
}

fn natural(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let n = cfg.n();
    let attack = attack_config(cfg);
    attack.validate(n)?;
    let spec = cfg.mechanism();
    let ell = attack.rounds_for(n);
    let opts = options(cfg);
    let trials = batch(cfg, |seed| {
        let mut mech = spec.build(n, ell);
        Ok(run_natural_attack(mech.as_mut(), n, &attack, seed, &opts)?)
    });
    let mut s = summary(cfg);
    let (mut final_fail, mut contain, mut cov) = (0, 0, 0.0);
    let mut rtf = Vec::new();
    let mut done = 0;
    for t in &trials {
        match &t.result {
            Ok(run) => {
                let r = &run.record.result;
                done += 1;
                s.successes += usize::from(run.outcome());
                final_fail += usize::from(run.final_failed());
                contain += usize::from(run.contains_sample());
                cov += run.sample_coverage();
                if let Some(x) = run.rounds_to_failure() {
                    rtf.push(x as f64);
                }
                s.rows.push(vec![
                    v(t.index),
                    v(t.seed),
                    v(spec),
                    v(n),
                    v(run.m),
                    v(ell),
                    v(r.outcome),
                    opt(r.first_failure_round),
                    v(r.max_error()),
                    v(run.final_failed()),
                    v(final_error(r)),
                    v(run.accusations.len()),
                    v(run.false_accusations()),
                    v(run.sample_coverage()),
                    opt(AttackRun::rounds_to_failure(run)),
                    String::new(),
                ]);
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    s.metrics = vec![
        ("final_failure_rate", frac(final_fail, s.trials)),
        ("containment_rate", frac(contain, s.trials)),
        ("mean_coverage", cov / done.max(1) as f64),
        ("median_rounds_to_failure", median(&rtf).unwrap_or(f64::NAN)),
        ("rounds", ell as f64),
    ];
    Ok(s)
}

fn balanced(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let n = cfg.n();
    let bcfg = BalancedConfig::new(cfg.scheme, cfg.lambda, attack_config(cfg));
    bcfg.attack.validate(n)?;
    build_scheme(cfg.scheme, cfg.lambda).map_err(|e| HarnessError::Config(e.to_string()))?;
    let spec = cfg.mechanism();
    let opts = options(cfg);
    let trials = batch(cfg, |seed| {
        let scheme =
            build_scheme(bcfg.scheme, bcfg.lambda).map_err(crate::game::GameError::from)?;
        let ell = bcfg.public_inputs(n, scheme.as_ref()).ell;
        let mut mech = spec.build(n, ell);
        Ok(run_balanced_attack(mech.as_mut(), n, &bcfg, seed, &opts)?)
    });
    let mut s = summary(cfg);
    let (mut final_fail, mut mpk, mut exact, mut cov, mut done) = (0, 0, 0, 0.0, 0);
    for t in &trials {
        match &t.result {
            Ok(run) => {
                let r = &run.record.result;
                let wrapped_exact = run.wrapped_true_answers() == run.inner_means.as_slice();
                let c = coverage(&run.accusations, &run.record.samples, run.m);
                done += 1;
                s.successes += usize::from(run.outcome());
                final_fail += usize::from(run.final_failed());
                mpk += usize::from(run.mpk_recovered);
                exact += usize::from(wrapped_exact);
                cov += c;
                s.rows.push(vec![
                    v(t.index),
                    v(t.seed),
                    v(spec),
                    v(n),
                    v(run.m),
                    v(run.k),
                    v(r.rounds()),
                    v(r.outcome),
                    opt(r.first_failure_round),
                    v(r.max_error()),
                    v(run.final_failed()),
                    v(final_error(r)),
                    v(run.mpk_phase_accurate),
                    v(run.mpk_recovered),
                    v(wrapped_exact),
                    v(run.encryption_failures),
                    v(run.accusations.len()),
                    v(c),
                    String::new(),
                ]);
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    s.metrics = vec![
        ("final_failure_rate", frac(final_fail, s.trials)),
        ("mpk_recovery_rate", frac(mpk, s.trials)),
        ("wrapped_exact_rate", frac(exact, s.trials)),
        ("mean_coverage", cov / done.max(1) as f64),
    ];
    Ok(s)
}

fn dp_baseline(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let n = cfg.n();
    let attack = attack_config(cfg);
    attack.validate(n)?;
    let ell = attack.rounds_for(n);
    let gauss = MechanismSpec::Gaussian { sigma: cfg.sigma };
    let sigma = gauss.sigma(n, ell).expect("gaussian has sigma");
    let opts = options(cfg);
    let trials = batch(cfg, |seed| {
        let g = run_natural_attack(gauss.build(n, ell).as_mut(), n, &attack, seed, &opts)?;
        let e = run_natural_attack(
            MechanismSpec::Empirical.build(n, ell).as_mut(),
            n,
            &attack,
            seed,
            &opts,
        )?;
        Ok((g, e))
    });
    let mut s = summary(cfg);
    let (mut ef, mut gff, mut eff) = (0, 0, 0);
    for t in &trials {
        match &t.result {
            Ok((g, e)) => {
                let (gr, er) = (&g.record.result, &e.record.result);
                s.successes += usize::from(gr.outcome);
                ef += usize::from(er.outcome);
                gff += usize::from(g.final_failed());
                eff += usize::from(e.final_failed());
                s.rows.push(vec![
                    v(t.index),
                    v(t.seed),
                    v(sigma),
                    v(gr.outcome),
                    opt(gr.first_failure_round),
                    v(gr.max_error()),
                    v(g.final_failed()),
                    v(er.outcome),
                    opt(er.first_failure_round),
                    v(er.max_error()),
                    v(e.final_failed()),
                    String::new(),
                ]);
            }
            Err(err) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, err));
            }
        }
    }
    s.metrics = vec![
        ("sigma", sigma),
        ("rounds", ell as f64),
        ("gaussian_failure_rate", frac(s.successes, s.trials)),
        ("empirical_failure_rate", frac(ef, s.trials)),
        ("gaussian_final_failure_rate", frac(gff, s.trials)),
        ("empirical_final_failure_rate", frac(eff, s.trials)),
    ];
    Ok(s)
}

fn ka_config(cfg: &ExperimentConfig) -> BalancedConfig {
    BalancedConfig::new(cfg.scheme, cfg.lambda, attack_config(cfg))
}

fn approx(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let n = cfg.n();
    let bcfg = ka_config(cfg);
    bcfg.attack.validate(n)?;
    let trials = batch(cfg, |seed| {
        Ok(balanced_approx_agreement(
            n,
            &bcfg,
            seed,
            SecondSample::Fresh,
            TranscriptMode::DigestOnly,
        )?)
    });
    let mut s = summary(cfg);
    let radius = crate::key_agreement::eavesdrop::agreement_radius(n);
    let out_r = crate::key_agreement::eavesdrop::OUTPUT_RADIUS;
    for t in &trials {
        match &t.result {
            Ok(r) => {
                let agree = (r.o1 - r.o2).abs() <= radius;
                let last = LastAnswerEcho.predict(&r.transcript);
                let mean = MeanOfAnswers.predict(&r.transcript);
                s.successes += usize::from(agree);
                s.rows.push(vec![
                    v(t.index),
                    v(t.seed),
                    v(r.o1),
                    v(r.o2),
                    v(r.hidden_true),
                    v(agree),
                    v(last),
                    v((last - r.o1).abs() <= out_r),
                    v(mean),
                    v((mean - r.o1).abs() <= out_r),
                    String::new(),
                ]);
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    let runs: Vec<_> = trials.into_iter().filter_map(|t| t.result.ok()).collect();
    let oob = OutOfBand::true_values(&runs);
    let rep = eavesdropper_gap(&runs, n, &[&LastAnswerEcho, &MeanOfAnswers]);
    let sanity = eavesdropper_gap(&runs, n, &[&oob]);
    s.metrics = vec![
        ("agreement_radius", radius),
        ("agreement_rate", frac(s.successes, s.trials)),
        ("last_answer_hit_rate", rep.eavesdroppers[0].1),
        ("mean_hit_rate", rep.eavesdroppers[1].1),
        ("best_hit_rate", rep.best_hit_rate()),
        ("gap", frac(s.successes, s.trials) - rep.best_hit_rate()),
        ("last_answer_truth_hit_rate", rep.eavesdroppers[0].2),
        ("mean_truth_hit_rate", rep.eavesdroppers[1].2),
        ("out_of_band_truth_hit_rate", sanity.eavesdroppers[0].2),
    ];
    Ok(s)
}

fn weak_ka(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let n = cfg.n();
    let bucketing =
        Bucketing::new(cfg.alpha(), cfg.beta()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let protocol = BalancedApprox {
        cfg: ka_config(cfg),
    };
    protocol.cfg.attack.validate(n)?;
    let trials = batch(cfg, |seed| Ok(run_weak_ka(&protocol, &bucketing, n, seed)?));
    let mut s = summary(cfg);
    let (mut same, mut gap, mut gerr, mut done) = (0, 0.0, 0.0, 0);
    for t in &trials {
        match &t.result {
            Ok(r) => {
                let best = [
                    LastAnswerEcho.predict(&r.transcript),
                    MeanOfAnswers.predict(&r.transcript),
                ]
                .iter()
                .map(|g| (g - r.o1).abs())
                .fold(f64::INFINITY, f64::min);
                done += 1;
                s.successes += usize::from(r.agree());
                same += usize::from(r.same_bucket());
                gap += (r.o1 - r.o2).abs();
                gerr += best;
                s.rows.push(vec![
                    v(t.index),
                    v(r.o1),
                    v(r.o2),
                    v(r.agree()),
                    v(best),
                    String::new(),
                ]);
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    s.metrics = vec![
        ("gamma", bucketing.gamma),
        ("bucket_bits", bucketing.bits as f64),
        ("agreement_rate", frac(s.successes, s.trials)),
        ("bucket_agreement_rate", frac(same, s.trials)),
        ("mean_output_gap", gap / done.max(1) as f64),
        ("mean_best_G_error", gerr / done.max(1) as f64),
    ];
    Ok(s)
}

fn gl(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let (mb, samples, err) = (cfg.mb, cfg.n(), cfg.oracle_error);
    let trials = batch(cfg, |seed| {
        let mut rng = stream(seed, "gl");
        let x = rng.random::<u64>() & ((1u64 << mb) - 1);
        let decoded = gl_decode(&mut NoisyOracle { x, error: err }, mb, samples, &mut rng);
        Ok((x, decoded))
    });
    let mut s = summary(cfg);
    for t in &trials {
        match &t.result {
            Ok((x, d)) => {
                s.successes += usize::from(x == d);
                s.rows.push(vec![
                    v(t.index),
                    v(t.seed),
                    v(x),
                    v(d),
                    v(x == d),
                    String::new(),
                ]);
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    s.metrics = vec![
        ("vote_correctness", (1.0 - err) * (1.0 - err) + err * err),
        ("recovery_rate", frac(s.successes, s.trials)),
    ];
    Ok(s)
}

/// Completeness, wrong-key rejection and key-length laws.
pub fn ibe_checks(
    scheme: &dyn IbeScheme,
    m: usize,
    seed: u64,
) -> Result<Vec<(String, bool, String)>, HarnessError> {
    let mut rng = stream(seed, "ibe-selftest");
    let mut keys = scheme
        .setup(m, &mut rng)
        .map_err(crate::game::GameError::from)?;
    scheme
        .keygen_all(&mut keys)
        .map_err(crate::game::GameError::from)?;
    let mut round_trip_failures = 0;
    let mut wrong_key_accepts = 0;
    for id in 0..m {
        for msg in [IbeMessage::NEG, IbeMessage::ZERO, IbeMessage::POS] {
            let ct = scheme
                .encrypt(&keys.mpk, id, msg, &mut rng)
                .map_err(crate::game::GameError::from)?;
            if decrypt(&keys.identity_keys[&id], &ct) != Ok(msg) {
                round_trip_failures += 1;
            }
            if m > 1 && decrypt(&keys.identity_keys[&((id + 1) % m)], &ct).is_ok() {
                wrong_key_accepts += 1;
            }
        }
    }
    let mut out = vec![
        (
            "round_trip".to_string(),
            round_trip_failures == 0,
            format!("{round_trip_failures} failures over {} pairs", 3 * m),
        ),
        (
            "wrong_key_rejected".to_string(),
            wrong_key_accepts == 0,
            format!("{wrong_key_accepts} accepted"),
        ),
    ];
    for lambda in [16, 32, 64] {
        let s = build_scheme(scheme.tag(), lambda).map_err(crate::game::GameError::from)?;
        let k = s.setup(m, &mut rng).map_err(crate::game::GameError::from)?;
        let law = match scheme.tag() {
            SchemeTag::Trivial => m * lambda,
            SchemeTag::Compact => lambda * identity_bits(m),
        };
        let sk = s.keygen(&k, 0).map_err(crate::game::GameError::from)?;
        let sk_law = match scheme.tag() {
            SchemeTag::Trivial => lambda,
            SchemeTag::Compact => law,
        };
        out.push((
            format!("mpk_length_lambda{lambda}"),
            k.mpk.len() == law && s.mpk_bits(m) == law && sk.len() == sk_law,
            format!(
                "mpk {} bits (law {law}), sk {} bits (law {sk_law})",
                k.mpk.len(),
                sk.len()
            ),
        ));
    }
    Ok(out)
}

fn ibe_selftest(cfg: &ExperimentConfig) -> Result<TrialSummary, HarnessError> {
    let m = cfg.m();
    let lambda = cfg.lambda;
    let trials = batch(cfg, |seed| {
        let mut all = Vec::new();
        for tag in [SchemeTag::Trivial, SchemeTag::Compact] {
            let scheme = build_scheme(tag, lambda).map_err(crate::game::GameError::from)?;
            for c in ibe_checks(scheme.as_ref(), m, seed)? {
                all.push((tag, c));
            }
        }
        Ok(all)
    });
    let mut s = summary(cfg);
    for t in &trials {
        match &t.result {
            Ok(checks) => {
                s.successes += usize::from(checks.iter().all(|(_, c)| c.1));
                for (tag, (name, passed, detail)) in checks {
                    s.rows.push(vec![
                        v(t.index),
                        v(t.seed),
                        v(tag),
                        name.clone(),
                        v(passed),
                        detail.clone(),
                        String::new(),
                    ]);
                }
            }
            Err(e) => {
                s.errored += 1;
                s.rows.push(error_row(cfg.kind, t.index, t.seed, e));
            }
        }
    }
    s.metrics = vec![("m", m as f64), ("pass_rate", frac(s.successes, s.trials))];
    Ok(s)
}
