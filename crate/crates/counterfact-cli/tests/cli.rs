//! End-to-end tests of the binary: exit codes, file contracts, and
//! byte-identical reproducibility of the whole pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counterfact"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .env_remove("COUNTERFACT_CONFIG")
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_writes_the_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["synth", "--n", "4000", "--seed", "7", "--out", "data.csv"],
    );
    assert_success(&out);
    let content = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(content.lines().count(), 4001); // header + 4000 rows
    assert!(content.starts_with("x1,x2,x3,x4,x5,rating"));
}

#[test]
fn missing_model_path_exits_1_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("data.csv"), "x1,rating\n1.0,2\n").unwrap();
    let out = run_in(
        dir.path(),
        &[
            "explain",
            "--model",
            "no_such_model.json",
            "--data",
            "data.csv",
            "--row",
            "0",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no_such_model.json"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["synth", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage"), "stderr: {stderr}");
}

#[test]
fn unknown_config_key_exits_1_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "frobnicate = 1\n").unwrap();
    let out = run_in(
        dir.path(),
        &["synth", "--config", "run.conf", "--out", "data.csv"],
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("frobnicate"), "stderr: {stderr}");
}

#[test]
fn config_file_comes_from_the_environment_too() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "n_points = 25\nseed = 3\n").unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("COUNTERFACT_CONFIG", "run.conf")
        .args(["synth", "--out", "data.csv"])
        .output()
        .expect("binary runs");
    assert_success(&out);
    let content = std::fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(content.lines().count(), 26);
}

/// Runs the whole pipeline in `dir` and returns the bytes of every output.
fn full_pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    std::fs::write(
        dir.join("run.conf"),
        "max_iters = 250\nlambda_ladder = 0.1,5,10,50\nepochs = 8\nseed = 7\n",
    )
    .unwrap();
    let conf = ["--config", "run.conf"];

    let out = run_in(
        dir,
        &[&["synth", "--n", "300", "--out", "data.csv"], &conf[..]].concat(),
    );
    assert_success(&out);
    let out = run_in(
        dir,
        &[
            &["train", "--data", "data.csv", "--out", "model.json"],
            &conf[..],
        ]
        .concat(),
    );
    assert_success(&out);
    for (method, file) in [("sparsity", "sp.csv"), ("gd", "gd.csv")] {
        let out = run_in(
            dir,
            &[
                &[
                    "batch",
                    "--model",
                    "model.json",
                    "--data",
                    "data.csv",
                    "--ratings",
                    "2,3,4",
                    "--method",
                    method,
                    "--workers",
                    "2",
                    "--out",
                    file,
                ],
                &conf[..],
            ]
            .concat(),
        );
        assert_success(&out);
    }
    let out = run_in(
        dir,
        &[
            &[
                "report",
                "--results",
                "sp.csv",
                "--gd-results",
                "gd.csv",
                "--out-dir",
                "reports",
            ],
            &conf[..],
        ]
        .concat(),
    );
    assert_success(&out);

    let mut outputs = Vec::new();
    for name in ["data.csv", "model.json", "sp.csv", "gd.csv"] {
        outputs.push((name.to_string(), std::fs::read(dir.join(name)).unwrap()));
    }
    for name in [
        "method_comparison.csv",
        "real_comparison.csv",
        "effort_by_rating.csv",
        "lambda_table.csv",
        "summary.txt",
    ] {
        outputs.push((
            format!("reports/{name}"),
            std::fs::read(dir.join("reports").join(name)).unwrap(),
        ));
    }
    outputs
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let a = full_pipeline(dir_a.path());
    let b = full_pipeline(dir_b.path());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert!(
            bytes_a == bytes_b,
            "{name_a} differs between identical runs"
        );
        assert!(!bytes_a.is_empty(), "{name_a} is empty");
    }
}

#[test]
fn scale_override_renames_the_grades() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_success(&run_in(
        d,
        &["synth", "--n", "200", "--seed", "5", "--out", "data.csv"],
    ));
    std::fs::write(d.join("grades.txt"), "G1\nG2\nG3\nG4\n").unwrap();
    assert_success(&run_in(
        d,
        &[
            "train",
            "--data",
            "data.csv",
            "--scale",
            "grades.txt",
            "--epochs",
            "8",
            "--seed",
            "5",
            "--out",
            "model.json",
        ],
    ));
    // Find a row rated 4 so the explanation has room to improve.
    let data = std::fs::read_to_string(d.join("data.csv")).unwrap();
    let row4 = data
        .lines()
        .skip(1)
        .position(|l| l.ends_with(",4"))
        .expect("a rating-4 row exists");
    let out = run_in(
        d,
        &[
            "explain",
            "--model",
            "model.json",
            "--data",
            "data.csv",
            "--row",
            &row4.to_string(),
            "--lambda-ladder",
            "0.1,5,10,50",
        ],
    );
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("(G4)") || stdout.contains("(G3)"),
        "custom symbols missing from: {stdout}"
    );
}

#[test]
fn masked_batch_respects_the_mask_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_success(&run_in(
        d,
        &["synth", "--n", "200", "--seed", "11", "--out", "data.csv"],
    ));
    assert_success(&run_in(
        d,
        &[
            "train",
            "--data",
            "data.csv",
            "--epochs",
            "8",
            "--seed",
            "11",
            "--out",
            "model.json",
        ],
    ));
    std::fs::write(d.join("mask.txt"), "# cannot be changed\nx1\nx2\n").unwrap();
    let out = run_in(
        d,
        &[
            "batch",
            "--model",
            "model.json",
            "--data",
            "data.csv",
            "--mask",
            "mask.txt",
            "--ratings",
            "4",
            "--lambda-ladder",
            "0.1,5,10,50",
            "--out",
            "masked.csv",
        ],
    );
    assert_success(&out);
    let content = std::fs::read_to_string(d.join("masked.csv")).unwrap();
    for line in content.lines().skip(1) {
        let changed = line.split(',').nth(9).unwrap();
        assert!(
            !changed.split(';').any(|n| n == "x1" || n == "x2"),
            "immutable feature suggested in: {line}"
        );
    }
}
