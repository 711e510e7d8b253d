//! Configuration parsing, deterministic suite runs and report output.

use std::path::PathBuf;

use exmix_core::check::Verdict;
use exmix_core::graph::GraphSpec;
use exmix_harness::config::TrialCounts;
use exmix_harness::{run_suite, ExperimentConfig, ReportDocument, SuiteKind};

fn small_config(suites: Vec<SuiteKind>) -> ExperimentConfig {
    ExperimentConfig {
        graphs: vec![GraphSpec::Cycle { n: 5 }, GraphSpec::Complete { n: 4 }],
        suites,
        trials: TrialCounts { mc: 2_000, chameleon: 400, goodness: 200 },
        seed: 7,
        ..ExperimentConfig::default()
    }
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exmix-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn empty_json_is_the_default_config() {
    assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
}

#[test]
fn config_round_trips_through_json() {
    let cfg = small_config(vec![SuiteKind::Exact, SuiteKind::Ratios]);
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ExperimentConfig::from_json(r#"{"unknown_field": 1}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"process": {"alpha": 0.3}}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"k_list": [0]}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"suites": ["nonsense"]}"#).is_err());
}

#[test]
fn partial_json_keeps_other_defaults() {
    let cfg = ExperimentConfig::from_json(r#"{"seed": 5, "graphs": [{"family": "cycle", "n": 7}]}"#).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.graphs, vec![GraphSpec::Cycle { n: 7 }]);
    assert_eq!(cfg.trials, TrialCounts::default());
}

#[test]
fn empty_suite_list_gives_an_empty_report() {
    let doc = run_suite(&small_config(Vec::new()));
    assert!(doc.records.is_empty() && doc.tables.is_empty());
    assert_eq!(doc.master_seed, 7);
}

#[test]
fn runs_are_deterministic_apart_from_runtimes() {
    let cfg = small_config(vec![SuiteKind::Spectral, SuiteKind::Exact, SuiteKind::Chameleon, SuiteKind::Ratios]);
    let a = run_suite(&cfg);
    let b = run_suite(&cfg);
    assert!(!a.records.is_empty());
    assert_eq!(a.without_runtimes(), b.without_runtimes());
    assert!(!a.has_failures(), "{:#?}", a.records.iter().filter(|r| r.verdict.is_failure()).collect::<Vec<_>>());
}

#[test]
fn suite_order_does_not_change_records() {
    let a = run_suite(&small_config(vec![SuiteKind::Exact]));
    let both = run_suite(&small_config(vec![SuiteKind::Spectral, SuiteKind::Exact]));
    let tail: Vec<_> = both.without_runtimes().records.into_iter().filter(|r| r.name.starts_with("exact")).collect();
    let exact: Vec<_> = a.without_runtimes().records.into_iter().filter(|r| r.name.starts_with("exact")).collect();
    assert_eq!(exact, tail);
}

#[test]
fn reports_write_json_and_csv() {
    let doc = run_suite(&small_config(vec![SuiteKind::Ratios, SuiteKind::Exact]));
    let dir = scratch_dir("report");
    let json_path = dir.join("report.json");
    doc.write_json(&json_path).unwrap();
    let back: ReportDocument = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(back, doc);

    doc.write_csv(&dir.join("csv")).unwrap();
    let records = std::fs::read_to_string(dir.join("csv/records.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(records.as_bytes());
    assert_eq!(reader.records().count(), doc.records.len());
    for t in &doc.tables {
        let text = std::fs::read_to_string(dir.join(format!("csv/{}.csv", t.name))).unwrap();
        assert_eq!(text.lines().count(), t.rows.len() + 1);
    }
    let counts = doc.counts();
    assert_eq!(counts.pass + counts.fail + counts.inconclusive + counts.report_only, doc.records.len());
    assert!(doc.records.iter().any(|r| r.verdict == Verdict::ReportOnly));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn documented_example_config_parses() {
    let cfg = ExperimentConfig::from_json(
        r#"{
          "graphs": [{ "family": "cycle", "n": 6 }, { "family": "hypercube", "dim": 3 }],
          "k_list": [2, 3],
          "process": { "alpha": 0.2, "eps": 0.01, "c_round": 8 },
          "trials": { "mc": 20000, "chameleon": 10000, "goodness": 2000 },
          "seed": 1,
          "suites": ["spectral", "exact", "chameleon", "diagnostics", "ratios"]
        }"#,
    )
    .unwrap();
    assert_eq!(cfg.suites, SuiteKind::ALL.to_vec());
    assert_eq!(cfg.process.c_profile, 16.0);
}
