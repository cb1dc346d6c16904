use std::sync::{Arc, Mutex};

use ada_arena::balanced::{
    m_tilde_run, run_balanced_attack, run_balanced_attack_with, BalancedConfig, KeyHolder,
    TildeVariant,
};
use ada_arena::fingerprint::AttackConfig;
use ada_arena::game::{GameOptions, TranscriptMode};
use ada_arena::ibe::SchemeTag;
use ada_arena::mechanisms::EmpiricalMean;

fn cfg(scheme: SchemeTag, rounds: usize) -> BalancedConfig {
    let mut a = AttackConfig::with_c(10);
    a.rounds = Some(rounds);
    BalancedConfig::new(scheme, 16, a)
}

#[test]
fn wrapped_answers_equal_inner_answers_every_round() {
    for scheme in [SchemeTag::Compact, SchemeTag::Trivial] {
        for seed in 0..20 {
            let run = run_balanced_attack(
                &mut EmpiricalMean::new(),
                20,
                &cfg(scheme, 80),
                seed,
                &GameOptions::default(),
            )
            .unwrap();
            assert!(run.mpk_recovered, "{scheme} seed {seed}");
            assert_eq!(run.encryption_failures, 0);
            assert_eq!(run.wrapped_true_answers().len(), run.inner_means.len());
            assert_eq!(run.wrapped_true_answers(), run.inner_means.as_slice());
            assert!(run.record.result.decrypt_failure_rounds.is_empty());
        }
    }
}

#[test]
fn hybrid_tilde_true_answers_match_inner() {
    for seed in 0..20 {
        let run = m_tilde_run(
            Box::new(EmpiricalMean::new()),
            TildeVariant::Hybrid,
            20,
            &cfg(SchemeTag::Compact, 60),
            true,
            seed,
            &GameOptions::default(),
        )
        .unwrap();
        assert!(run.diagnostics.mpk_phase_accurate);
        assert_eq!(run.diagnostics.wrapped_true, run.diagnostics.inner_true);
    }
}

#[test]
fn real_and_hybrid_tilde_agree_for_empirical_mean() {
    let opts = GameOptions {
        transcript: TranscriptMode::Full,
        ..Default::default()
    };
    for seed in 0..10 {
        let c = cfg(SchemeTag::Compact, 80);
        let real = m_tilde_run(
            Box::new(EmpiricalMean::new()),
            TildeVariant::Real,
            20,
            &c,
            false,
            seed,
            &opts,
        )
        .unwrap();
        let hyb = m_tilde_run(
            Box::new(EmpiricalMean::new()),
            TildeVariant::Hybrid,
            20,
            &c,
            false,
            seed,
            &opts,
        )
        .unwrap();
        assert!(real.transcript.same_messages(&hyb.transcript));
        assert_eq!(real.result.given_answers, hyb.result.given_answers);
    }
}

#[test]
fn key_holder_answers_exactly() {
    for seed in 0..5 {
        let leak = Arc::new(Mutex::new(None));
        let mut mech = KeyHolder::new(leak.clone());
        let run = run_balanced_attack_with(
            &mut mech,
            20,
            &cfg(SchemeTag::Compact, 80),
            seed,
            &GameOptions::default(),
            Some(leak),
        )
        .unwrap();
        assert!(!run.outcome());
        assert!(run.record.result.max_error() < 1e-12);
    }
}

#[test]
fn empirical_mean_fails_balanced_attack() {
    let failures = (0..10)
        .filter(|&seed| {
            run_balanced_attack(
                &mut EmpiricalMean::new(),
                20,
                &cfg(SchemeTag::Compact, 400),
                seed,
                &GameOptions::default(),
            )
            .unwrap()
            .outcome()
        })
        .count();
    assert!(failures >= 8, "{failures}");
}
