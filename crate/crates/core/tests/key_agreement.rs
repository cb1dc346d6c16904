use ada_arena::balanced::BalancedConfig;
use ada_arena::fingerprint::AttackConfig;
use ada_arena::game::TranscriptMode;
use ada_arena::harness::hoeffding;
use ada_arena::ibe::SchemeTag;
use ada_arena::key_agreement::{
    balanced_approx_agreement, eavesdropper_gap, gl_attack_ka, inner_product, Bucketing,
    CheatingGuesser, FairCoin, LastAnswerEcho, MeanOfAnswers, OutOfBand, SecondSample,
};
use ada_arena::rng::stream;
use proptest::prelude::*;

fn ka_cfg(rounds: usize) -> BalancedConfig {
    let mut a = AttackConfig::with_c(4);
    a.rounds = Some(rounds);
    BalancedConfig::new(SchemeTag::Compact, 16, a)
}

#[test]
fn inner_product_linearity_exhaustive() {
    for mb in 1..=10u32 {
        let size = 1u64 << mb;
        for s in 0..size {
            for r in 0..size {
                for i in 0..mb {
                    assert_eq!(
                        inner_product(s, r) ^ inner_product(s, r ^ (1 << i)),
                        (s >> i) & 1 == 1
                    );
                }
            }
        }
    }
}

#[test]
fn same_sample_mode_respects_hoeffding() {
    let (n, alpha, runs) = (100, 0.3, 40);
    let cfg = ka_cfg(150);
    let exceed = (0..runs)
        .filter(|&seed| {
            let r = balanced_approx_agreement(
                n,
                &cfg,
                seed,
                SecondSample::SameAsFirst,
                TranscriptMode::DigestOnly,
            )
            .unwrap();
            assert_eq!(r.o2, r.hidden_true);
            (r.o1 - r.o2).abs() > alpha
        })
        .count();
    // The bound is about 0.022; allow sampling slack.
    assert!(
        exceed as f64 / runs as f64 <= hoeffding(n, alpha) + 0.1,
        "{exceed}"
    );
}

#[test]
fn out_of_band_eavesdropper_is_perfect() {
    let cfg = ka_cfg(150);
    let runs: Vec<_> = (0..10)
        .map(|s| {
            balanced_approx_agreement(40, &cfg, s, SecondSample::Fresh, TranscriptMode::DigestOnly)
                .unwrap()
        })
        .collect();
    let oob = OutOfBand::true_values(&runs);
    let rep = eavesdropper_gap(&runs, 40, &[&LastAnswerEcho, &MeanOfAnswers, &oob]);
    assert_eq!(rep.eavesdroppers[2].2, 1.0);
    assert_eq!(rep.runs, 10);
}

#[test]
fn gl_attack_rates() {
    let b = Bucketing::with_gamma(0.1).unwrap();
    let t = ada_arena::Transcript::new(
        1,
        1,
        ada_arena::DomainSpec::index(1),
        TranscriptMode::DigestOnly,
    );
    let mut rng = stream(8, "gl-attack");
    let trials = 4000;
    let mut fair_hits = 0;
    for i in 0..trials {
        let o1 = -1.0 + 2.0 * (i as f64 + 0.5) / trials as f64;
        if i < 300 {
            let a = gl_attack_ka(
                &t,
                &mut CheatingGuesser { o1, bucketing: b },
                &b,
                5,
                &mut rng,
            );
            assert_eq!(a.bucket, Some(b.bucketize(o1 + a.v)));
            assert!((a.value(&b).unwrap() - o1).abs() <= 2.0 * b.gamma);
        }
        let a = gl_attack_ka(&t, &mut FairCoin, &b, 5, &mut rng);
        fair_hits += usize::from(a.bucket == Some(b.bucketize(o1 + a.v)));
    }
    let rate = fair_hits as f64 / trials as f64;
    let base = 1.0 / (1u64 << b.bits) as f64;
    assert!((rate - base).abs() < 0.015, "{rate} vs {base}");
}

proptest! {
    #[test]
    fn bucket_cover(o in -1.0f64..=1.0, u in 0.0f64..=1.0, g in 0.01f64..1.9) {
        let b = Bucketing::with_gamma(g).unwrap();
        let x = o + u * b.gamma;
        let i = b.bucketize(x);
        prop_assert!(i < b.count);
        prop_assert!((b.point(i) - x).abs() <= b.gamma / 2.0 + 1e-12);
        prop_assert!((i as u64) <= b.mask());
    }

    #[test]
    fn exact_match_always_agrees(o in -1.0f64..=1.0, u in 0.0f64..=1.0, r in any::<u64>()) {
        let b = Bucketing::with_gamma(0.1).unwrap();
        let v = u * b.gamma;
        let r = r & b.mask();
        let (b1, b2) = (b.bucketize(o + v), b.bucketize(o + v));
        prop_assert_eq!(inner_product(b1 as u64, r), inner_product(b2 as u64, r));
    }
}
