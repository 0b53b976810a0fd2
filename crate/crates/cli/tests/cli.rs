use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sniffy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sniffy")).args(args).output().unwrap()
}

/// A tiny experiment that finishes in well under a second per trial.
fn setup(dir: &Path) -> PathBuf {
    std::fs::write(dir.join("w.txt"), "8 6 0.5\n".to_string() + &"................\n".repeat(5) + "..S.............\n" + &"................\n".repeat(6))
        .unwrap();
    let cfg = dir.join("c.toml");
    std::fs::write(
        &cfg,
        "[experiment]\nworld = \"w.txt\"\nn_trials = 2\nworkers = 2\n\
         [plume]\nt_warm = 5.0\n\
         [team]\nrobots = 2\nt_limit = 10.0\n",
    )
    .unwrap();
    cfg
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("out");
    let o = sniffy(&["run", "--config", s(&cfg), "--trials", "4", "--seed", "9", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 4);
    for seed in 9..13 {
        assert!(out.join(format!("trajectories/{seed}.csv")).exists());
    }
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, summary);
}

#[test]
fn replay_dumps_trajectory_and_beliefs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("rp");
    let o = sniffy(&["replay", "--config", s(&cfg), "--seed", "3", "--out", s(&out), "--dump-belief", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("trajectory_3.csv").exists());
    assert!(out.join("trial_3.json").exists());
    let beliefs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("belief_3_"))
        .count();
    assert!(beliefs >= 2, "{beliefs} belief dumps");
}

#[test]
fn sweep_emits_a_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("sw");
    let o = sniffy(&["sweep", "--config", s(&cfg), "--key", "team.tau", "--values", "0.01,0.1,1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1]["value"], "0.1");
    assert_eq!(std::fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 4);
}

#[test]
fn compare_runs_every_planner_on_the_same_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let out = dir.path().join("cmp");
    let o = sniffy(&["compare", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let keyed: serde_json::Map<String, serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = keyed.keys().map(String::as_str).collect();
    assert_eq!(names, ["infotaxis", "sniffysquad", "surge_cast"]);
    for name in names {
        let csv = std::fs::read_to_string(out.join(name).join("results.csv")).unwrap();
        let seeds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(seeds, ["1", "2"]);
    }
    assert!(out.join("compare.json").exists());
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[experiment]\nworld = \"nowhere.txt\"\n").unwrap();
    let o = sniffy(&["run", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("experiment.world"), "{err}");
}

#[test]
fn usage_errors_are_nonzero() {
    let o = sniffy(&["fly"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).to_lowercase().contains("usage"));
    let o = sniffy(&["run", "--config", "x.toml", "--bogus"]);
    assert!(!o.status.success());
}
