//! Command-line behaviour: reproducible outputs, exit codes and the tables
//! each subcommand writes.

use isac_core::config::ConfigError;
use isac_harness::cli::CliError;
use isac_harness::experiments::ExperimentError;
use std::path::Path;
use std::process::{Command, Output};

/// Reduced frame (`N = 256`, `P = 24`) so sweeps finish quickly.
const SMALL: &str = r#"{ "p": 24, "t_us": "12.8", "t_chirp_us": "64/60*12.8", "t_slot_us": "76/60*12.8" }"#;

fn sim(args: &[&str], dir: &Path) -> Output {
    let config = dir.join("config.json");
    std::fs::write(&config, SMALL).unwrap();
    Command::new(env!("CARGO_BIN_EXE_isac-sim")).args(args).arg("--config").arg(&config).env("ISAC_WORKERS", "1").output().unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The run record without the file paths it echoes.
fn record(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(&read(dir, "run.json")).unwrap();
    let args = v["args"].as_object_mut().unwrap();
    args.remove("out");
    args.remove("config");
    v
}

#[test]
fn same_seed_gives_identical_outputs() {
    let root = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b", "c"].iter().map(|d| root.path().join(d)).collect();
    for (dir, seed) in runs.iter().zip(["3", "3", "4"]) {
        std::fs::create_dir_all(dir).unwrap();
        let out = sim(&["ser", "--snr", "-30:-25:5", "--trials", "3", "--seed", seed, "--out", dir.to_str().unwrap()], dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&runs[0], "ser.csv"), read(&runs[1], "ser.csv"));
    assert_eq!(record(&runs[0]), record(&runs[1]));
    assert_ne!(record(&runs[0])["result"], record(&runs[2])["result"]);
}

#[test]
fn dynamic_run_is_reproducible() {
    let root = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"].iter().map(|d| root.path().join(d)).collect();
    for dir in &runs {
        std::fs::create_dir_all(dir).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_isac-sim"))
            .args(["dynamic", "--frames", "4", "--snr", "10", "--seed", "2", "--out", dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["at_tracks.csv", "pt_tracks.csv", "error_deciles.csv"] {
        assert_eq!(read(&runs[0], name), read(&runs[1], name), "{name}");
    }
    assert_eq!(record(&runs[0]), record(&runs[1]));
    let header = String::from_utf8(read(&runs[0], "pt_tracks.csv")).unwrap();
    assert!(header.starts_with("frame,link,track_id"), "{header}");
}

#[test]
fn rate_table_covers_divisors_of_p() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_isac-sim")).args(["rate", "--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(dir.path(), "rate.csv");
    let mut r = csv::Reader::from_reader(&table[..]);
    let rows: Vec<(usize, f64)> = r.records().map(|x| x.unwrap()).map(|x| (x[0].parse().unwrap(), x[4].parse().unwrap())).collect();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6, 8]);
    let at3 = rows.iter().find(|r| r.0 == 3).unwrap().1;
    assert!((500e3..=700e3).contains(&at3), "{at3}");
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim(&["ser", "--snr", "5:1:1", "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = sim(&["dynamic", "--snr", "0:10:5", "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "p": 25 }"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_isac-sim")).args(["rate", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("isac-sim:"));
}

#[test]
fn invariant_violations_map_to_two() {
    assert_eq!(CliError::Experiment(ExperimentError::Invariant("counts".into())).exit_code(), 2);
    assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    assert_eq!(CliError::Config(ConfigError::TimeExpr("x".into())).exit_code(), 1);
}
