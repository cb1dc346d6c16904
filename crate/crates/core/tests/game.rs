use ada_arena::fingerprint::{run_natural_attack, AttackConfig};
use ada_arena::game::{parse_log, write_log, GameOptions, QueryForm, TranscriptMode};
use ada_arena::mechanisms::{EmpiricalMean, GaussianMechanism, NoiseSchedule, TrueMeanOracle};
use ada_arena::{DomainSpec, Element, FiniteDistribution, Query, SampleSet};
use proptest::prelude::*;

fn attack(rounds: usize) -> AttackConfig {
    let mut a = AttackConfig::with_c(20);
    a.rounds = Some(rounds);
    a
}

#[test]
fn oracle_needs_permission() {
    let err = run_natural_attack(
        &mut TrueMeanOracle::new(),
        20,
        &attack(100),
        1,
        &GameOptions::default(),
    );
    assert!(err.is_err());
}

#[test]
fn oracle_is_never_wrong() {
    let opts = GameOptions {
        allow_oracle: true,
        ..Default::default()
    };
    for seed in 0..10 {
        let run =
            run_natural_attack(&mut TrueMeanOracle::new(), 30, &attack(300), seed, &opts).unwrap();
        assert!(!run.outcome());
        assert!(run.record.result.errors.iter().all(|&e| e == 0.0));
    }
}

#[test]
fn same_seed_same_transcript() {
    let opts = GameOptions {
        transcript: TranscriptMode::Full,
        ..Default::default()
    };
    let a = run_natural_attack(&mut EmpiricalMean::new(), 20, &attack(150), 5, &opts).unwrap();
    let b = run_natural_attack(&mut EmpiricalMean::new(), 20, &attack(150), 5, &opts).unwrap();
    let c = run_natural_attack(&mut EmpiricalMean::new(), 20, &attack(150), 6, &opts).unwrap();
    assert!(a.record.transcript.same_messages(&b.record.transcript));
    assert_eq!(
        a.record.transcript.fingerprint(),
        b.record.transcript.fingerprint()
    );
    assert_ne!(
        a.record.transcript.fingerprint(),
        c.record.transcript.fingerprint()
    );
}

#[test]
fn huge_noise_stays_in_range_and_fails() {
    let mut mech = GaussianMechanism::new(NoiseSchedule::constant(50.0));
    let run = run_natural_attack(&mut mech, 20, &attack(60), 2, &GameOptions::default()).unwrap();
    assert!(run.outcome());
    assert!(run
        .record
        .result
        .given_answers
        .iter()
        .all(|y| y.abs() <= 1.0));
}

#[test]
fn log_round_trip() {
    let opts = GameOptions {
        transcript: TranscriptMode::Full,
        ..Default::default()
    };
    let run = run_natural_attack(&mut EmpiricalMean::new(), 20, &attack(40), 3, &opts).unwrap();
    let text = write_log(&run.record.transcript, &run.record.result, "empirical");
    let (header, rows) = parse_log(&text).unwrap();
    assert!(header
        .iter()
        .any(|(k, v)| k == "mechanism" && v == "empirical"));
    assert_eq!(rows.len(), 40);
    for (row, (&y, &t)) in rows.iter().zip(
        run.record
            .result
            .given_answers
            .iter()
            .zip(&run.record.result.true_answers),
    ) {
        assert_eq!(row.answer, y);
        assert_eq!(row.true_answer, t);
    }
}

proptest! {
    // Exact population value against a brute-force weighted sum.
    #[test]
    fn true_answer_matches_weighted_sum(
        table in prop::collection::vec(-1.0f64..=1.0, 1..40),
        raw in prop::collection::vec(0.01f64..1.0, 40),
    ) {
        let m = table.len();
        let total: f64 = raw[..m].iter().sum();
        let weights: Vec<f64> = raw[..m].iter().map(|w| w / total).collect();
        let domain = DomainSpec::index(m);
        let support: Vec<Element> = (0..m as u32).map(Element::Index).collect();
        let Ok(dist) = FiniteDistribution::weighted(domain, support, weights.clone()) else {
            return Ok(());
        };
        let q = Query::table(domain, table.clone()).unwrap();
        let expect: f64 = table.iter().zip(&weights).map(|(a, b)| a * b).sum();
        prop_assert!((dist.true_answer(&q).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn empirical_mean_is_sample_average(
        table in prop::collection::vec(-1.0f64..=1.0, 1..30),
        picks in prop::collection::vec(0usize..1000, 1..50),
    ) {
        let m = table.len();
        let domain = DomainSpec::index(m);
        let idx: Vec<usize> = picks.iter().map(|p| p % m).collect();
        let samples = SampleSet::new(idx.iter().map(|&j| Element::Index(j as u32)).collect());
        let q = Query::table(domain, table.clone()).unwrap();
        let got = ada_arena::mechanisms::empirical_answer(&samples, &q).unwrap();
        let expect = idx.iter().map(|&j| table[j]).sum::<f64>() / idx.len() as f64;
        prop_assert!((got - expect).abs() < 1e-12);
        prop_assert!(matches!(q.form, QueryForm::Table(_)));
    }
}
