use pla_core::experiments::{estimate_ber, pd_vs_snr, proposed_trial, simulate_eta, ScenarioConfig, Scheme};
use pla_core::hypotest::Hypothesis;
use pla_core::recon::{enroll, verify, EnrollmentRecord};
use pla_core::rng::trial_rng;
use pla_core::BitVector;
use rand::Rng;

fn cfg(trials: usize, snr_db: f64) -> ScenarioConfig {
    ScenarioConfig {
        trials,
        baseline_trials: 1_000,
        master_seed: 11,
        ..ScenarioConfig::default()
    }
    .with_snr(snr_db)
}

#[test]
fn alice_reconciles_at_10_db_and_above() {
    for snr in [10.0, 20.0] {
        let p0 = estimate_ber(Hypothesis::H0, &cfg(1_000, snr)).unwrap();
        assert!(p0 <= 0.01, "snr {snr}: {p0}");
    }
}

#[test]
fn eve_gets_coin_flips() {
    let p1 = estimate_ber(Hypothesis::H1, &cfg(1_000, 10.0)).unwrap();
    assert!((p1 - 0.5).abs() <= 0.05, "{p1}");
}

#[test]
fn record_survives_both_encodings() {
    let c = cfg(100, 10.0);
    let code = c.build_code().unwrap();
    let mut rng = trial_rng(1, 2, 3, 4);
    let q = BitVector::from_bools((0..code.n()).map(|_| rng.random_bool(0.5)));
    let record = enroll(&q, &code).unwrap();
    let from_bytes = EnrollmentRecord::from_bytes(&record.to_bytes()).unwrap();
    let from_json = EnrollmentRecord::from_json(&record.to_json()).unwrap();
    assert_eq!(from_bytes, record);
    assert_eq!(from_json, record);
    let p = c.assumed_crossover().unwrap();
    let direct = verify(&q, &record, p, &code).unwrap();
    assert_eq!(verify(&q, &from_bytes, p, &code).unwrap(), direct);
    assert_eq!(direct.eta, 0);
    assert!(direct.crc_ok);
}

#[test]
fn trials_are_reproducible_per_index() {
    let c = cfg(100, 5.0);
    let code = c.build_code().unwrap();
    let run = |t| {
        let mut rng = trial_rng(c.master_seed, c.scenario_hash(), 0, t);
        proposed_trial(&c, &code, Hypothesis::H1, &mut rng).unwrap()
    };
    assert_eq!(run(3), run(3));
    let full = simulate_eta(&c, &code, Hypothesis::H1).unwrap();
    assert_eq!(full.etas.len(), 100);
}

#[test]
fn detection_does_not_drop_with_snr() {
    let report = pd_vs_snr(&cfg(400, 0.0), &[0.0, 5.0, 15.0]).unwrap();
    let pts: Vec<_> = report.scheme(Scheme::Proposed).collect();
    for w in pts.windows(2) {
        let slack = 2.0 * (w[0].stderr + w[1].stderr);
        assert!(w[1].y_empirical + slack >= w[0].y_empirical, "{:?}", pts);
    }
}
