//! End-to-end checks of the `vrident` binary: subcommand chain, exit
//! codes, and artifact layout.

use std::path::Path;
use std::process::Output;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vrident")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    std::process::Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn vrident")
}

const SMALL_CONFIG: &str = r#"
seed = 17

[dataset]
root = "data"
out_dir = "out"

[synth]
users = 5
apps = 2
duration_scale = 0.45

[classifier]
n_estimators_min = 15
n_estimators_max = 40
iterations = 2

[eval]
sensors = ["bm"]
scopes = ["app", "group"]
zero_day_sensors = []
subsession_curves = true
"#;

#[test]
fn full_subcommand_chain() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL_CONFIG).unwrap();
    let cfg = &["--config", "run.toml"];

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "synth"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("data/user_1/app_1/session_1/bm.csv")
        .is_file());
    assert!(dir.path().join("data/groups.toml").is_file());

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "ingest"]);
    assert!(out.status.success());
    assert!(dir.path().join("out/dataset_index.json").is_file());

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "summarize"]);
    assert!(out.status.success());
    assert!(dir.path().join("out/blocks/bm_a1.csv").is_file());
    assert!(dir.path().join("out/blocks/bm_a1.columns.json").is_file());

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "train"]);
    assert!(out.status.success());
    let model = dir.path().join("out/models/bm__app_a_1.json");
    assert!(model.is_file());
    let selection = dir.path().join("out/models/bm__app_a_1.selection.json");
    assert!(selection.is_file());
    let sel_text = std::fs::read_to_string(&selection).unwrap();
    assert!(sel_text.contains("row_digest"));

    // same config and seed give identical model files
    let first = std::fs::read(&model).unwrap();
    let out = run_in(dir.path(), &[cfg[0], cfg[1], "train"]);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(&model).unwrap());

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "evaluate"]);
    assert!(out.status.success());
    for report in [
        "accuracy_table.csv",
        "subsession_curves.csv",
        "zero_day_matrix.csv",
        "top_features.csv",
        "run_manifest.json",
    ] {
        assert!(
            dir.path().join("out").join(report).is_file(),
            "{report} missing"
        );
    }

    let out = run_in(dir.path(), &[cfg[0], cfg[1], "report"]);
    assert!(out.status.success());
    assert!(dir.path().join("out/report/accuracy_table.csv").is_file());
    assert!(dir.path().join("out/report/report_manifest.json").is_file());
}

#[test]
fn evaluate_scope_and_sensor_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL_CONFIG).unwrap();
    assert!(run_in(dir.path(), &["--config", "run.toml", "synth"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &[
            "--config", "run.toml", "evaluate", "--scope", "app:a_1", "--sensor", "bm", "--s",
            "max",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("out/accuracy_table.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("bm,app:a_1,a_1,full,max"));
}

#[test]
fn sweep_r_emits_per_ratio_reports() {
    let dir = tempfile::tempdir().unwrap();
    // low ratios merge blocks, so sessions must be long enough to leave
    // every user at least `cv_folds` rows per app at the smallest r
    let config = SMALL_CONFIG.replace("duration_scale = 0.45", "duration_scale = 1.1");
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    assert!(run_in(dir.path(), &["--config", "run.toml", "synth"])
        .status
        .success());
    let out = run_in(
        dir.path(),
        &["--config", "run.toml", "sweep-r", "--values", "0.5,1"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(dir.path().join("out/sweep_r.csv")).unwrap();
    assert!(summary.lines().count() >= 3); // header + one row per (r, sensor)
    assert!(dir
        .path()
        .join("out/sweep_r/r_0.5/accuracy_table.csv")
        .is_file());
    assert!(dir
        .path()
        .join("out/sweep_r/r_1/accuracy_table.csv")
        .is_file());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["definitely-not-a-command"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(dir.path(), &["evaluate", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[blocking]\nr = 3.5\n").unwrap();
    let out = run_in(dir.path(), &["--config", "bad.toml", "evaluate"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("r must be in (0, 2]"), "stderr: {msg}");

    std::fs::write(dir.path().join("typo.toml"), "[blocking]\nmoed = \"fba\"\n").unwrap();
    let out = run_in(dir.path(), &["--config", "typo.toml", "evaluate"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("line"),
        "expected a line-positioned error, got: {msg}"
    );
}

#[test]
fn pipeline_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL_CONFIG).unwrap();
    // no corpus generated: dataset root is missing
    let out = run_in(dir.path(), &["--config", "run.toml", "evaluate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["--help"]).status.success());
    assert!(run_in(dir.path(), &["--version"]).status.success());
}

#[test]
fn config_from_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("env.toml"), SMALL_CONFIG).unwrap();
    let out = std::process::Command::new(bin())
        .current_dir(dir.path())
        .env("VRIDENT_CONFIG", "env.toml")
        .arg("synth")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("data/user_1/app_1/session_1/bm.csv")
        .is_file());
}
