//! End-to-end tests of the command-line binary: flags, outputs, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn mutag_dir() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/MUTAG").display().to_string()
}

fn avcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avcn")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["train", "--help"][..], &["--version"][..]] {
        let out = avcn(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
    }
    assert!(stdout(&avcn(&["--help"])).contains("prepare"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &[][..],
        &["explode"][..],
        &["train", "--epochs", "three"][..],
        &["train", "--no-such-flag"][..],
    ] {
        let out = avcn(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
    }
    // Semantic parameter violations are usage errors too.
    let out = avcn(&["train", "--dataset-dir", &mutag_dir(), "--dropout", "1.5"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("dropout"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = avcn(&[
        "train",
        "--dataset-dir",
        dir.path().to_str().unwrap(),
        "--dataset",
        "nothing",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("missing file"), "{}", stderr(&out));

    std::fs::write(dir.path().join("bad_A.txt"), "1, 99\n").unwrap();
    std::fs::write(dir.path().join("bad_graph_indicator.txt"), "1\n1\n").unwrap();
    std::fs::write(dir.path().join("bad_graph_labels.txt"), "1\n").unwrap();
    let out = avcn(&["train", "--dataset-dir", dir.path().to_str().unwrap(), "--dataset", "bad"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn prepare_train_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("grids.bin");
    let report = dir.path().join("report.txt");
    let mutag = mutag_dir();

    // Tiny configuration: the point is the plumbing, not the score.
    let shared = [
        "--dataset-dir",
        mutag.as_str(),
        "--dataset",
        "MUTAG",
        "--prototypes",
        "16",
        "--depth",
        "2",
        "--channels",
        "2",
        "--filter-sizes",
        "3,5",
        "--layers-per-branch",
        "1",
        "--dense-units",
        "4",
        "--dropout",
        "0",
        "--epochs",
        "1",
        "--folds",
        "5",
        "--seed",
        "3",
    ];

    let mut prepare_args = vec!["prepare"];
    prepare_args.extend_from_slice(&shared);
    prepare_args.extend_from_slice(&["--out", cache.to_str().unwrap()]);
    let out = avcn(&prepare_args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("188 graphs as 16 x 7 grids"), "{}", stdout(&out));
    assert!(cache.exists());

    let mut train_args = vec!["train"];
    train_args.extend_from_slice(&shared);
    train_args.extend_from_slice(&["--cache", cache.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    let out = avcn(&train_args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("mean accuracy"), "{}", stdout(&out));
    assert!(report.exists());
    assert!(report.with_extension("txt.timings").exists());

    // Re-training against the same cache must hit it and reproduce the
    // deterministic report bytes.
    let first = std::fs::read(&report).unwrap();
    let out = avcn(&train_args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(std::fs::read(&report).unwrap(), first);

    let out = avcn(&["report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("mean accuracy"), "{text}");
    assert!(text.contains("repeat  fold  accuracy"), "{text}");

    let out = avcn(&["report", dir.path().join("absent.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}
