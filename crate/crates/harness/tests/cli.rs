use std::path::{Path, PathBuf};
use std::process::Command;

use splinegale::gen::trial_rng;
use splinegale::{gen_filtration, trial_seed, ExperimentConfig, RunOutput};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("splinegale-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splinegale"))
}

#[test]
fn golden_filtration() {
    let cfg = ExperimentConfig::load(&data("golden_config.json")).unwrap();
    let g = gen_filtration(&cfg, &mut trial_rng(trial_seed(42, 0, 0))).unwrap();
    let expected = std::fs::read_to_string(data("golden_filtration.json")).unwrap();
    assert_eq!(serde_json::to_string_pretty(&g).unwrap(), expected.trim_end());
    assert_eq!(g.filtration.len(), 16);
    assert!(g.gammas.iter().all(|&x| x <= 4.0));

    let out = bin().args(["gen", "--config"]).arg(data("golden_config.json")).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn check_writes_reports_and_sets_exit_code() {
    let dir = scratch("check");
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"schema": 1, "check": "remez", "k": 3, "trials": 20, "levels": 2}"#).unwrap();
    let out = bin().args(["check", "--seed", "5", "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run: RunOutput = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(run.config.master_seed, 5);
    assert_eq!(run.reports.len(), 20);
    let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(csv.starts_with("check,seed,k,kprime,gamma,level_count,lhs,rhs,ratio,pass,wall_ms\n"));
    assert_eq!(csv.lines().count(), 21);
    assert!(bin().args(["report", "--input"]).arg(&dir).status().unwrap().success());

    std::fs::write(&cfg, r#"{"schema": 1, "check": "tower", "q": 0.3, "trials": 2, "levels": 3}"#).unwrap();
    let status = bin().args(["check", "--config"]).arg(&cfg).arg("--out").arg(&dir).status().unwrap();
    assert_eq!(status.code(), Some(1));
    assert_eq!(bin().args(["report", "--input"]).arg(dir.join("report.json")).status().unwrap().code(), Some(1));

    std::fs::write(&cfg, r#"{"schema": 1, "colour": "blue"}"#).unwrap();
    let out = bin().args(["check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
}

#[test]
fn sweep_command() {
    let dir = scratch("sweep");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"schema": 1, "check": "burkholder", "trials": 3, "levels": 4, "sweep": {"axis": "p", "values": [1.5, 2.0, 3.0]}}"#,
    )
    .unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("axis,value,check,seed"));
    assert_eq!(csv.lines().count(), 10);
    assert!(bin().args(["report", "--input"]).arg(&dir).status().unwrap().success());

    std::fs::write(&cfg, r#"{"schema": 1, "check": "burkholder"}"#).unwrap();
    assert_eq!(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&dir).status().unwrap().code(), Some(2));
}
