use std::path::Path;
use std::process::Command;

use hardy_tower::shooting::ContinuationRecord;
use hardy_tower_cli::config::{EpsRange, ExperimentConfig, Mode};
use hardy_tower_cli::records::{read_energy_csv, read_record_csv};
use hardy_tower_cli::run::{error_exit_code, run};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardy-tower"))
}

fn small_sweep(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Mode::Sweep, 7, 0.0);
    cfg.eps = Some(EpsRange { start: 1e-1, end: 1e-3, points: 5, geometric: true });
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn record_csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&small_sweep(dir.path())).unwrap();
    assert_eq!(summary.exit_code(), 0);
    let json: ContinuationRecord =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("record.json")).unwrap()).unwrap();
    assert_eq!(json.entries.len(), 5);
    let csv = read_record_csv(&dir.path().join("record.csv"), 7, 0.0).unwrap();
    assert_eq!(csv, json.entries);
    assert!(dir.path().join("verification.json").exists());
    assert!(dir.path().join("rates.svg").exists());
    assert!(dir.path().join("profile_004.svg").exists());
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&small_sweep(a.path())).unwrap();
    run(&small_sweep(b.path())).unwrap();
    for name in ["record.csv", "record.json", "verification.json", "rates.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn energy_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Mode::Energy, 10, 0.0);
    cfg.k = 2;
    cfg.eps = Some(EpsRange { start: 1e-2, end: 1e-4, points: 3, geometric: true });
    cfg.output_dir = dir.path().to_path_buf();
    run(&cfg).unwrap();
    let rows = read_energy_csv(&dir.path().join("energy.csv")).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    let back: Vec<hardy_tower_cli::records::EnergyRow> = serde_json::from_value(json["rows"].clone()).unwrap();
    assert_eq!(rows, back);
    assert_eq!(rows.len(), 6);
}

#[test]
fn constants_row_reports_gamma_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["constants", "--n", "10", "--gamma", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("constants.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(row[2].parse::<f64>().unwrap(), 4.0);
}

#[test]
fn tower_construction_below_gamma_two_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--n", "7", "--gamma", "3", "--k", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let mut cfg = ExperimentConfig::new(Mode::Sweep, 7, 3.0);
    cfg.k = 2;
    cfg.output_dir = dir.path().to_path_buf();
    assert_eq!(error_exit_code(&run(&cfg).unwrap_err()), 2);
}

#[test]
fn bad_input_exits_with_1() {
    let out = bin().args(["sweep", "--n", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["sweep", "--n", "10", "--gamma", "0", "--eps", "1e-4:1e-1:5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &cfg_path,
        format!(
            r#"{{"mode": "constants", "n": 7, "gamma": -1.5, "output_dir": {:?}}}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = bin().arg("constants").arg("--config").arg(&cfg_path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("constants.json").exists());
}

#[test]
fn empty_record_writes_no_plots() {
    let dir = tempfile::tempdir().unwrap();
    let record = ContinuationRecord {
        n: 7,
        gamma: 0.0,
        k: 1,
        entries: vec![],
        failure: None,
        provenance: Default::default(),
    };
    let files = hardy_tower_cli::plots::emit_plots(dir.path(), &record, &[]).unwrap();
    assert!(files.is_empty());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
