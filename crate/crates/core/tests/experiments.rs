use cvsim::experiments::{
    minimal_modes, run_kerr, run_pointer, run_undercount, ExperimentConfig, OutputFormat, SCHEMA_VERSION,
};
use serde_json::Value;

fn quick() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.set_trials(50);
    c.pointer.fock_trials = 5;
    c
}

#[test]
fn partial_json_merges_over_defaults() {
    let c = ExperimentConfig::from_json(r#"{"seed": 7, "kerr": {"period": 4}, "output": {"format": "csv"}}"#).unwrap();
    let d = ExperimentConfig::default();
    assert_eq!(c.seed, 7);
    assert_eq!(c.kerr.period, 4);
    assert_eq!(c.kerr.cutoff, d.kerr.cutoff);
    assert_eq!(c.output.format, OutputFormat::Csv);
    assert_eq!(c.pointer.trials, d.pointer.trials);
}

#[test]
fn unknown_or_invalid_fields_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"kerr": {"perod": 4}}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"undercount": {"trials": 0}}"#).is_err());
    assert!(ExperimentConfig::from_json("[1, 2]").is_err());
}

#[test]
fn reports_are_versioned_and_carry_their_config() {
    let c = quick();
    let report = run_kerr(&c).unwrap();
    let v: Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["schema_version"], SCHEMA_VERSION);
    assert_eq!(v["experiment"], "kerr");
    assert_eq!(v["config"]["period"], c.kerr.period);
    assert_eq!(v["passed"], report.checks.iter().all(|c| c.passed));
    let csv = report.to_csv().unwrap();
    assert!(csv.contains("schema_version"));
}

#[test]
fn seeds_separate_and_reproduce_runs() {
    let c = quick();
    let a = run_pointer(&c).unwrap().to_json();
    assert_eq!(a, run_pointer(&c).unwrap().to_json());
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(a, run_pointer(&other).unwrap().to_json());
}

#[test]
fn undercount_tables_cover_every_valid_pair() {
    let c = quick();
    let report = run_undercount(&c).unwrap();
    let table = report.tables.iter().find(|t| !t.rows.is_empty()).unwrap();
    let pairs = c
        .undercount
        .photons
        .iter()
        .flat_map(|&k| c.undercount.modes.iter().map(move |&n| (k, n)))
        .filter(|&(k, n)| k <= n)
        .count();
    assert_eq!(table.rows.len(), pairs);
    assert!(report.check_named("exact_within_bound").unwrap().passed);
}

#[test]
fn minimal_mode_count_matches_linear_search() {
    for k in 2..9usize {
        let eps = 0.05;
        let collision = |n: usize| 1.0 - (0..k).map(|i| (n - i) as f64 / n as f64).product::<f64>();
        let linear = (k..).find(|&n| collision(n) <= eps).unwrap() as u64;
        assert_eq!(minimal_modes(k, eps, 1 << 40), Some(linear), "k = {k}");
        // never more than the pair-counting estimate
        assert!(linear as f64 <= (k * (k - 1)) as f64 / (2.0 * eps) + 1.0);
    }
    assert_eq!(minimal_modes(1000, 1e-9, 1000), None);
}
