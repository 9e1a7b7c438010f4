//! End-to-end tests of the `qpg` binary and its run-store artifacts.

use std::path::Path;
use std::process::{Command, Output};

use qpg_cli::store::{parse_strict_csv, NOISE_SWEEP_HEADER, REWARD_LOG_HEADER};

fn qpg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn usage_errors_exit_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["train", "--agent", "banana", "--exp", "x"],
        vec![
            "train",
            "--agent",
            "classical",
            "--exp",
            "x",
            "--episodes",
            "-3",
        ],
        vec![
            "train",
            "--agent",
            "classical",
            "--exp",
            "x",
            "--lr",
            "fast",
        ],
        vec!["train", "--agent", "classical", "--exp", "x", "--what", "1"],
        vec!["nonsense"],
    ] {
        let output = qpg(tmp.path(), &args);
        assert_eq!(output.status.code(), Some(1), "args: {args:?}");
        assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
    }
}

#[test]
fn eval_of_missing_experiment_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let output = qpg(tmp.path(), &["eval", "--exp", "ghost"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("ghost"));
}

#[test]
fn training_writes_the_expected_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let output = qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "25",
            "--hidden",
            "8",
            "--exp",
            "artifacts",
            "--seed",
            "3",
        ],
    );
    assert_success(&output);

    let run = tmp.path().join("runs/artifacts");
    for file in [
        "config.json",
        "reward_log.csv",
        "policy_classical.json",
        "train_meta.json",
    ] {
        assert!(run.join(file).exists(), "missing {file}");
    }

    let csv = std::fs::read_to_string(run.join("reward_log.csv")).unwrap();
    let records = parse_strict_csv(&csv, 5).unwrap();
    assert_eq!(records[0].join(","), REWARD_LOG_HEADER);
    assert_eq!(records.len() - 1, 25);
    // Episode indices count up from zero.
    assert_eq!(records[1][0], "0");
    assert_eq!(records[25][0], "24");
}

#[test]
fn rerun_requires_overwrite_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "train",
        "--agent",
        "classical",
        "--episodes",
        "5",
        "--hidden",
        "4",
        "--exp",
        "dup",
    ];
    assert_success(&qpg(tmp.path(), &args));
    let second = qpg(tmp.path(), &args);
    assert_eq!(second.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&second.stderr).contains("--overwrite"));

    let mut with_flag = args.to_vec();
    with_flag.push("--overwrite");
    assert_success(&qpg(tmp.path(), &with_flag));
}

#[test]
fn identical_runs_produce_byte_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    for exp in ["rep_a", "rep_b"] {
        assert_success(&qpg(
            tmp.path(),
            &[
                "train",
                "--agent",
                "quantum",
                "--episodes",
                "20",
                "--exp",
                exp,
                "--seed",
                "11",
            ],
        ));
    }
    let a = std::fs::read(tmp.path().join("runs/rep_a/reward_log.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("runs/rep_b/reward_log.csv")).unwrap();
    assert_eq!(a, b);

    let wa = std::fs::read(tmp.path().join("runs/rep_a/policy_quantum.json")).unwrap();
    let wb = std::fs::read(tmp.path().join("runs/rep_b/policy_quantum.json")).unwrap();
    assert_eq!(wa, wb);
}

#[test]
fn evaluation_sweep_written_and_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    assert_success(&qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "15",
            "--hidden",
            "8",
            "--exp",
            "sweep",
            "--seed",
            "5",
        ],
    ));
    let eval_args = [
        "eval",
        "--exp",
        "sweep",
        "--rollouts",
        "3",
        "--eval-seeds",
        "2",
    ];
    assert_success(&qpg(tmp.path(), &eval_args));

    let run = tmp.path().join("runs/sweep");
    let csv = std::fs::read_to_string(run.join("noise_sweep.csv")).unwrap();
    let records = parse_strict_csv(&csv, 4).unwrap();
    assert_eq!(records[0].join(","), NOISE_SWEEP_HEADER);
    // Default sweep: the four noise levels, sorted ascending.
    let sigmas: Vec<&str> = records[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(sigmas, vec!["0", "0.02", "0.05", "0.1"]);

    // Same invocation, same report bytes.
    let first = std::fs::read(run.join("eval_report.json")).unwrap();
    assert_success(&qpg(tmp.path(), &eval_args));
    let second = std::fs::read(run.join("eval_report.json")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn single_sigma_gives_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    assert_success(&qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "8",
            "--hidden",
            "4",
            "--exp",
            "single",
            "--seed",
            "2",
        ],
    ));
    assert_success(&qpg(
        tmp.path(),
        &[
            "eval",
            "--exp",
            "single",
            "--sigma",
            "0.0",
            "--rollouts",
            "2",
            "--eval-seeds",
            "1",
        ],
    ));
    let csv = std::fs::read_to_string(tmp.path().join("runs/single/noise_sweep.csv")).unwrap();
    let records = parse_strict_csv(&csv, 4).unwrap();
    assert_eq!(records.len(), 2); // header + one row
}

#[test]
fn training_log_summary_mode() {
    let tmp = tempfile::tempdir().unwrap();
    assert_success(&qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "10",
            "--hidden",
            "4",
            "--exp",
            "summary",
            "--seed",
            "9",
        ],
    ));
    let output = qpg(
        tmp.path(),
        &["eval", "--exp", "summary", "--from-training-log"],
    );
    assert_success(&output);
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("runs/summary/eval_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["returns_source"]["training_log"]["episodes"], 10);
    assert!(report["rows"].as_array().unwrap().is_empty());
}

#[test]
fn config_json_written_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    assert_success(&qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "classical",
            "--episodes",
            "3",
            "--hidden",
            "4",
            "--exp",
            "ordered",
        ],
    ));
    let run = tmp.path().join("runs/ordered");
    let config_time = std::fs::metadata(run.join("config.json"))
        .unwrap()
        .modified()
        .unwrap();
    let log_time = std::fs::metadata(run.join("reward_log.csv"))
        .unwrap()
        .modified()
        .unwrap();
    assert!(config_time <= log_time);
}

#[test]
fn reloaded_weights_replay_evaluation_identically() {
    use qpg_core::eval::{evaluate, EvalConfig};
    use qpg_core::policy::NormalizationSpec;
    use qpg_core::vqc::MeasurementNoiseModel;

    let tmp = tempfile::tempdir().unwrap();
    assert_success(&qpg(
        tmp.path(),
        &[
            "train",
            "--agent",
            "quantum",
            "--episodes",
            "12",
            "--exp",
            "replay",
            "--seed",
            "21",
        ],
    ));
    let path = tmp.path().join("runs/replay/policy_quantum.json");
    let policy_a = qpg_cli::weights::load(
        &path,
        NormalizationSpec::default(),
        MeasurementNoiseModel::none(),
    )
    .unwrap();
    let policy_b = qpg_cli::weights::load(
        &path,
        NormalizationSpec::default(),
        MeasurementNoiseModel::none(),
    )
    .unwrap();
    let cfg = EvalConfig {
        rollouts_per_point: 4,
        noise_levels: vec![0.0, 0.05],
        seeds: vec![1, 2],
        deterministic_actions: false,
    };
    let a = evaluate(&policy_a, &cfg, 500).unwrap();
    let b = evaluate(&policy_b, &cfg, 500).unwrap();
    assert_eq!(a, b);
}
