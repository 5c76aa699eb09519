use xlmimo::harness::{
    read_results, run_monte_carlo, sidecar_path, write_results, ExperimentConfig, ReceiverKind,
    RESULTS_HEADER,
};
use xlmimo::SystemConfig;

fn small_system() -> SystemConfig {
    SystemConfig {
        m: 32,
        k: 4,
        b: 2,
        t: 3,
        snr_db: vec![-10.0, 0.0, 10.0],
        seed: 99,
        cov_refresh: 10,
        ..SystemConfig::default()
    }
}

fn all_receivers() -> Vec<ReceiverKind> {
    vec![ReceiverKind::MfBp, ReceiverKind::Zf, ReceiverKind::CentralVmp, ReceiverKind::Bound]
}

#[test]
fn noiseless_zf_makes_no_errors() {
    let sys = SystemConfig { snr_db: vec![f64::INFINITY], ..small_system() };
    let res = run_monte_carlo(&ExperimentConfig::new(sys, vec![ReceiverKind::Zf], 200)).unwrap();
    let p = res.point("zf", 0).unwrap();
    assert_eq!(p.errors, 0);
    assert_eq!(p.symbols, 800);
}

#[test]
fn worker_count_does_not_change_results() {
    let mut a = ExperimentConfig::new(small_system(), all_receivers(), 60);
    a.workers = Some(1);
    let mut b = a.clone();
    b.workers = Some(3);
    let ra = run_monte_carlo(&a).unwrap();
    let rb = run_monte_carlo(&b).unwrap();
    assert_eq!(ra.counts, rb.counts);
    assert_eq!(ra.diagnostics, rb.diagnostics);
}

#[test]
fn results_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let exp = ExperimentConfig::new(small_system(), all_receivers(), 30);
    let res = run_monte_carlo(&exp).unwrap();
    let path = dir.path().join("run.csv");
    write_results(&res, &path).unwrap();

    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), res.rows().len());
    for (a, b) in rows.iter().zip(res.rows()) {
        assert_eq!((&a.receiver, a.errors, a.symbols, a.trials, a.seed), (&b.receiver, b.errors, b.symbols, b.trials, b.seed));
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some(RESULTS_HEADER));

    // the snapshot is itself a loadable config
    let snap = std::fs::read_to_string(sidecar_path(&path, "config")).unwrap();
    assert_eq!(SystemConfig::from_text(&snap).unwrap(), exp.system);
    assert!(sidecar_path(&path, "diag.csv").exists());

    let again = dir.path().join("again.csv");
    write_results(&run_monte_carlo(&exp).unwrap(), &again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn error_rates_fall_with_snr() {
    let exp = ExperimentConfig::new(small_system(), all_receivers(), 300);
    let res = run_monte_carlo(&exp).unwrap();
    for label in &res.labels {
        for i in 1..res.snr_db.len() {
            let lo = res.point(label, i - 1).unwrap();
            let hi = res.point(label, i).unwrap();
            let slack = 3.0 * (lo.stderr().powi(2) + hi.stderr().powi(2)).sqrt();
            assert!(hi.ser() <= lo.ser() + slack, "{label}: {} then {}", lo.ser(), hi.ser());
        }
    }
}

#[test]
fn bound_is_never_beaten_by_much() {
    let exp = ExperimentConfig::new(small_system(), all_receivers(), 300);
    let res = run_monte_carlo(&exp).unwrap();
    for i in 0..res.snr_db.len() {
        let bound = res.point("bound", i).unwrap();
        for label in ["mfbp", "zf", "cvmp"] {
            let p = res.point(label, i).unwrap();
            let slack = 3.0 * (bound.stderr().powi(2) + p.stderr().powi(2)).sqrt();
            assert!(bound.ser() <= p.ser() + slack, "{label} at point {i}");
        }
    }
}

#[test]
fn invalid_experiments_are_rejected() {
    let mut exp = ExperimentConfig::new(small_system(), all_receivers(), 0);
    assert!(run_monte_carlo(&exp).is_err());
    exp.trials = 5;
    exp.readout_lpu = 2;
    assert!(run_monte_carlo(&exp).is_err());
    exp.readout_lpu = 0;
    exp.receivers.clear();
    assert!(run_monte_carlo(&exp).is_err());
    let bad = SystemConfig { b: 3, ..small_system() };
    assert!(run_monte_carlo(&ExperimentConfig::new(bad, all_receivers(), 5)).is_err());
}
