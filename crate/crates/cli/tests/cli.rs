use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use drift_fx::backtest::{read_records, PerformanceReport, Strategy};
use tempfile::TempDir;

fn drift_fx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drift-fx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = drift_fx(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn demo(dir: &Path, n: usize, days: usize, seed: u64) {
    ok(&[
        "synth",
        "--demo",
        &n.to_string(),
        "--days",
        &days.to_string(),
        "--seed",
        &seed.to_string(),
        "--out-dir",
        s(dir),
    ]);
}

const THREE_REGIMES: &str = r#"{
  "start_date": "2015-01-05",
  "n_days": 900,
  "instruments": [
    {"symbol": "EURUSD", "pip_size": 0.0001, "initial_mid": 1.1, "volatility": 0.001, "relative_spread": 0.0002},
    {"symbol": "USDJPY", "pip_size": 0.01, "initial_mid": 110.0, "volatility": 0.001, "relative_spread": 0.0002}
  ],
  "regimes": [
    {"probability": 0.4, "shifts": [0.0, 0.0]},
    {"probability": 0.3, "shifts": [0.02, 0.0]},
    {"probability": 0.3, "shifts": [0.01, 0.017]}
  ]
}"#;

#[test]
fn synth_writes_symbol_files_and_manifest_deterministically() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    demo(a.path(), 3, 60, 7);
    demo(b.path(), 3, 60, 7);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    let symbols = manifest["instruments"].as_array().unwrap();
    assert_eq!(symbols.len(), 3);
    for sym in symbols {
        let name = format!("{}.csv", sym.as_str().unwrap());
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
    assert_eq!(fs::read(a.path().join("manifest.json")).unwrap(), fs::read(b.path().join("manifest.json")).unwrap());
}

#[test]
fn synth_without_a_source_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = drift_fx(&["synth", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let missing = drift_fx(&["synth", "--config", s(&dir.path().join("nope.json")), "--out-dir", s(dir.path())]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn fit_features_recovers_planted_regimes_and_feeds_backtest() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("synth.json");
    fs::write(&cfg, THREE_REGIMES).unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--config", s(&cfg), "--seed", "3", "--out-dir", s(&data)]);
    let fit = dir.path().join("fit");
    let printed = ok(&["fit-features", "--data-dir", s(&data), "--out-dir", s(&fit)]);
    assert!(printed.starts_with("k=3 "), "{printed}");

    let bt = dir.path().join("bt");
    ok(&[
        "backtest",
        "--data-dir",
        s(&data),
        "--mixture",
        s(&fit.join("mixture.json")),
        "--out-dir",
        s(&bt),
    ]);
    let agents: serde_json::Value = serde_json::from_str(&fs::read_to_string(bt.join("agents.json")).unwrap()).unwrap();
    assert!(agents["fit"].is_null());
    let drl = &agents["agents"][0]["drl"]["theta"];
    assert_eq!(drl.as_array().unwrap().len(), 3 + 2);
}

#[test]
fn forced_single_component() {
    let dir = TempDir::new().unwrap();
    demo(dir.path(), 3, 120, 1);
    let printed = ok(&[
        "fit-features",
        "--data-dir",
        s(dir.path()),
        "--k-min",
        "1",
        "--k-max",
        "1",
        "--out-dir",
        s(&dir.path().join("fit")),
    ]);
    assert!(printed.starts_with("k=1 "), "{printed}");
}

#[test]
fn switches_and_filters_shape_the_records() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    demo(&data, 3, 150, 2);
    let bare = dir.path().join("bare");
    ok(&["backtest", "--data-dir", s(&data), "--no-costs", "--no-carry", "--out-dir", s(&bare)]);
    let path = bare.join("records.csv");
    let records = read_records(fs::File::open(&path).unwrap(), &path).unwrap();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r.cost == 0.0 && r.carry == 0.0));

    let carry = dir.path().join("carry");
    ok(&["backtest", "--data-dir", s(&data), "--strategies", "carry", "--out-dir", s(&carry)]);
    let path = carry.join("records.csv");
    let records = read_records(fs::File::open(&path).unwrap(), &path).unwrap();
    assert!(records.iter().all(|r| r.strategy == Strategy::Carry));
    assert!(carry.join("cumulative_carry.csv").exists());
    assert!(!carry.join("cumulative_drl.csv").exists());
}

#[test]
fn reports_are_reproducible_and_auditable() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    demo(&data, 4, 200, 5);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["backtest", "--data-dir", s(&data), "--seed", "11", "--out-dir", s(out)]);
    }
    for f in ["records.csv", "report.json", "report.txt", "agents.json", "mixture.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let audit = dir.path().join("audit");
    let table = ok(&["report", s(&a.join("records.csv")), "--out-dir", s(&audit)]);
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(audit.join("report.json")).unwrap());
    assert_eq!(table, fs::read_to_string(a.join("report.txt")).unwrap());
}

#[test]
fn report_guards_and_arithmetic() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(drift_fx(&["report", s(&empty)]).status.code(), Some(2));

    let hand = dir.path().join("hand.csv");
    fs::write(
        &hand,
        "date,instrument,strategy,position,gross,cost,carry,net\n\
         2020-01-01,EURUSD,carry,1,0.01,0,0,0.01\n\
         2020-01-02,EURUSD,carry,1,0,0,0,0\n\
         2020-01-03,EURUSD,carry,1,-0.01,0,0,-0.01\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["report", s(&hand), "--out-dir", s(&out)]);
    let report = PerformanceReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let row = &report.get(Strategy::Carry).unwrap().net;
    assert_eq!(row.count, 3);
    assert_eq!(row.mean, 0.0);
    assert_eq!(row.sum, 0.0);
}

#[test]
fn data_and_usage_failures_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing");
    let out = drift_fx(&["backtest", "--data-dir", s(&missing), "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(drift_fx(&["bogus"]).status.code(), Some(1));
    let data = dir.path().join("data");
    demo(&data, 2, 40, 1);
    let bad = drift_fx(&["backtest", "--data-dir", s(&data), "--tau", "1.5", "--out-dir", s(dir.path())]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(drift_fx(&["--help"]).status.success());
}
