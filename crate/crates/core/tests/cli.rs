use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qhj(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhj")).args(args).env("QHJ_OUTPUT_DIR", out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rank_general_reports_fourteen() {
    let dir = tempfile::tempdir().unwrap();
    let o = qhj(&["rank", "--family", "general"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rank.json")).unwrap()).unwrap();
    let fam = &report["data"]["families"][0];
    assert_eq!(fam["family"], "general");
    assert_eq!(fam["rank"], 14);
    assert!(fam["singular_values"].as_array().unwrap().len() >= 14);
    assert!(fam["samples"].as_u64().unwrap() > 0);
    assert!(stdout(&o).contains("PASS rank.rank_general"));
}

#[test]
fn degenerate_gamma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[compose]\ngamma = [2.0, 0.5, 0.1, 0.2, 0.3, 0.4]\n").unwrap();
    let o = qhj(&["compose", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("γ1·γ2"));
}

#[test]
fn unknown_key_and_bad_arguments_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "seeed = 3\n").unwrap();
    assert_eq!(qhj(&["basis", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(qhj(&["rank", "--family", "bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(qhj(&["no-such-command"], dir.path()).status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sep.toml");
    fs::write(&cfg, "[modified]\nconstants = { c1 = 0.3, c2 = 0.1, c3 = 0.1 }\n").unwrap();
    let o = qhj(&["modified", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL modified.separation_constants"));
    assert!(stdout(&o).contains("continuity constants must sum to zero"));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(qhj(&["verify-all"], d.path()).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn seed_is_recorded_and_flag_beats_env() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = qhj(&["microstates", "--seed", "7", "--output-dir", flag_dir.path().to_str().unwrap()], env_dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!env_dir.path().join("microstates.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(flag_dir.path().join("microstates.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["data"]["separable"], false);
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qhj(&["trajectory"], dir.path()).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,v,residual"));
    let x = lines.nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = x.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 17, "{x}");
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = qhj(&["print-config"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cfg = qhj_core::config::ExperimentConfig::from_toml(&stdout(&o)).unwrap();
    assert_eq!(cfg, qhj_core::config::ExperimentConfig::bundled());
}

#[test]
fn gnuplot_scripts_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gp.toml");
    fs::write(&cfg, "[output]\ngnuplot = true\n").unwrap();
    assert_eq!(qhj(&["basis", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(0));
    let gp = fs::read_to_string(dir.path().join("basis.gp")).unwrap();
    assert!(gp.contains("'basis.csv' using 1:2"));
}

#[test]
fn annotated_examples_pass() {
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/examples");
    let mut n = 0;
    for entry in fs::read_dir(examples).unwrap() {
        let path = entry.unwrap().path();
        let command = path.file_stem().unwrap().to_str().unwrap().to_owned();
        let dir = tempfile::tempdir().unwrap();
        let o = qhj(&[&command, "--config", path.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{command}: {}", stdout(&o));
        n += 1;
    }
    assert_eq!(n, 8);
}
