use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use erasure_sim::records::{parse_jsonl, CSV_COLUMNS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_erasure-sim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const PASSIVE: &str = "\
[run]
experiment = \"passive-ite\"
backend = \"two-state\"
n_trajectories = 400

[potential]
barrier_height = 2.0

[passive]
wait_multiplier = 1.0
";

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "passive.toml", PASSIVE);
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let out = run(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "42",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&[
        "run",
        "--config",
        &cfg,
        "--seed",
        "42",
        "--workers",
        "3",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let recs = parse_jsonl(&String::from_utf8(ta).unwrap()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].seed, 42);
    assert_eq!(recs[0].config.run.master_seed, 42);
    assert_eq!(recs[0].mean_work, Some(0.0));
    assert_eq!(recs[0].verdict.as_deref(), Some("bound-vacuous"));
}

#[test]
fn different_seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "passive.toml", PASSIVE);
    let a = run(&["run", "--config", &cfg, "--seed", "1"]).stdout;
    let b = run(&["run", "--config", &cfg, "--seed", "2"]).stdout;
    assert_ne!(a, b);
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cap.toml",
        "[run]\nexperiment = \"capacitor-sweep\"\nn_trajectories = 100\n\
         [sweep]\nvalues = [0.0, 0.5, 1.0]\n",
    );
    let res = dir.path().join("cap.jsonl");
    let out = run(&["sweep", "--config", &cfg, "--out", res.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let res = res.to_str().unwrap();

    let csv = run(&["report", res, "--format", "csv"]);
    assert!(csv.status.success());
    let csv = String::from_utf8(csv.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(lines.count(), 3);

    let plot = String::from_utf8(run(&["report", res, "--format", "plot"]).stdout).unwrap();
    let data: Vec<&str> = plot
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .collect();
    assert_eq!(data.len(), 3);
    assert!(data.iter().all(|l| l.split_whitespace().count() == 3));

    let table = String::from_utf8(run(&["report", res]).stdout).unwrap();
    assert!(table.starts_with("experiment"));
}

#[test]
fn config_errors_exit_2_and_name_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "[run]\nexperiment = \"reset\"\n[control]\nbarrier_scale = 1.5\n",
            "control.barrier_scale",
        ),
        (
            "[run]\nexperiment = \"reset\"\n[step]\ndt = -1.0\n",
            "step.dt",
        ),
        (
            "[run]\nexperiment = \"reset\"\n[reset]\nspeed = 3\n",
            "speed",
        ),
    ];
    for (i, (text, key)) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.toml"), text);
        let out = run(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(key), "{err}");
    }
}

#[test]
fn wrong_subcommand_for_experiment_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mfpt.toml",
        "[run]\nexperiment = \"mfpt\"\n[sweep]\nvalues = [4.0, 5.0]\n",
    );
    assert_eq!(run(&["run", "--config", &cfg]).status.code(), Some(2));
    let cfg = write(dir.path(), "passive.toml", PASSIVE);
    assert_eq!(run(&["sweep", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn starved_mfpt_sweep_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "mfpt.toml",
        "[run]\nexperiment = \"mfpt\"\nn_trajectories = 20\n\
         [step]\nstep_budget = 100\n[sweep]\nvalues = [8.0, 9.0]\n",
    );
    let res = dir.path().join("m.jsonl");
    let out = run(&["sweep", "--config", &cfg, "--out", res.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let recs = parse_jsonl(&fs::read_to_string(&res).unwrap()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.inconclusive));
}

#[test]
fn validate_single_criterion() {
    let out = run(&["validate", "--only", "A7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS A7 "));
}

#[test]
fn validate_quick_runs_a1_a4_a6() {
    let out = run(&["validate", "--quick"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<&str> = text
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    assert_eq!(ids, ["A1", "A4", "A6"]);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_criterion_exits_2() {
    assert_eq!(run(&["validate", "--only", "A0"]).status.code(), Some(2));
}

#[test]
fn version_flag() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("erasure-sim"));
}
