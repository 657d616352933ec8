//! Golden-file and behavior tests for the mrwer command line.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn fixture_str(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

fn mrwer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrwer"))
        .args(args)
        .output()
        .expect("failed to run mrwer")
}

fn stdout_of(args: &[&str]) -> String {
    let out = mrwer(args);
    assert!(
        out.status.success(),
        "mrwer {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is UTF-8")
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("golden file readable")
}

#[test]
fn normalize_ladder_matches_goldens_bytewise() {
    let input = fixture_str("norm_ladder_input.txt");
    let cases = [
        ("", "norm_ladder_raw.txt"),
        ("filler-words", "norm_ladder_filler_words.txt"),
        ("filler-words,english-normalize", "norm_ladder_english.txt"),
        (
            "filler-words,english-normalize,stutters-repetitions",
            "norm_ladder_stutters.txt",
        ),
        (
            "filler-words,english-normalize,stutters-repetitions,filler-phrases",
            "norm_ladder_phrases.txt",
        ),
    ];
    for (steps, expected) in cases {
        let out = stdout_of(&["normalize", "--steps", steps, &input]);
        assert_eq!(out, golden(expected), "steps {steps:?} diverge from {expected}");
    }
}

#[test]
fn normalize_preserves_line_structure() {
    let out = stdout_of(&["normalize", &fixture_str("norm_ladder_input.txt")]);
    assert_eq!(out.lines().count(), 20);
}

#[test]
fn build_fst_matches_golden_bytewise() {
    let out = stdout_of(&[
        "build-fst",
        &fixture_str("three_word_v.txt"),
        &fixture_str("three_word_nv.txt"),
    ]);
    assert_eq!(out, golden("three_word.fst"));
}

#[test]
fn build_fst_reports_forks_on_stderr() {
    let out = mrwer(&[
        "build-fst",
        &fixture_str("three_word_v.txt"),
        &fixture_str("three_word_nv.txt"),
    ]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("forks: 1"), "stderr: {err}");
    assert!(err.contains("paths: 2"), "stderr: {err}");
}

#[test]
fn build_fst_rejects_empty_reference() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "\n").unwrap();
    let out = mrwer(&[
        "build-fst",
        empty.to_str().unwrap(),
        &fixture_str("three_word_nv.txt"),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty reference"));
}

#[test]
fn score_report_matches_golden_bytewise() {
    let out = stdout_of(&[
        "score",
        &fixture_str("three_word.fst"),
        &fixture_str("three_word_hyp.txt"),
        "--oracle",
    ]);
    assert_eq!(out, golden("three_word_report.json"));
}

#[test]
fn score_hypothesis_equal_to_reference_is_zero() {
    let out = stdout_of(&[
        "score",
        &fixture_str("three_word.fst"),
        &fixture_str("three_word_v.txt"),
    ]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["mwer"], serde_json::json!(0.0));
    assert_eq!(report["overall"]["reference_words"], serde_json::json!(3));
}

#[test]
fn score_validation_failure_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fst");
    std::fs::write(&bad, "start\t0\n1\t0\tx\tV\nfinal\t1\n").unwrap();
    let out = mrwer(&[
        "score",
        bad.to_str().unwrap(),
        &fixture_str("three_word_hyp.txt"),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("acyclicity"), "stderr: {err}");
}

#[test]
fn score_multiple_hypotheses_writes_one_report_each() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrwer(&[
        "score",
        &fixture_str("three_word.fst"),
        &fixture_str("three_word_hyp.txt"),
        &fixture_str("three_word_v.txt"),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let hyp_report =
        std::fs::read_to_string(dir.path().join("three_word_hyp.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&hyp_report).unwrap();
    assert_eq!(value["mwer"], serde_json::json!(0.3333));
    assert!(value.get("oracle").is_none(), "no --oracle, no oracle key");
    let v_report = std::fs::read_to_string(dir.path().join("three_word_v.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&v_report).unwrap();
    assert_eq!(value["mwer"], serde_json::json!(0.0));
    let out = mrwer(&[
        "score",
        &fixture_str("three_word.fst"),
        &fixture_str("three_word_hyp.txt"),
        &fixture_str("three_word_v.txt"),
    ]);
    assert!(!out.status.success(), "multiple hypotheses need --output-dir");
}

#[test]
fn ablate_matches_golden_bytewise() {
    let out = stdout_of(&[
        "ablate",
        &fixture_str("ablate_ref.txt"),
        &fixture_str("ablate_hyp.txt"),
    ]);
    assert_eq!(out, golden("ablate_golden.tsv"));
}

#[test]
fn ablate_identical_inputs_are_all_zero() {
    let out = stdout_of(&[
        "ablate",
        &fixture_str("three_word_v.txt"),
        &fixture_str("three_word_v.txt"),
    ]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let cols: Vec<&str> = row.split('\t').collect();
        assert_eq!(&cols[1..], &["0.0000", "0.0000", "0.0000"], "row: {row}");
    }
}

#[test]
fn ablate_filler_word_row_drops_the_deletion() {
    // Raw shows the deleted "um"; the first cleaning rung erases it.
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let h = dir.path().join("h.txt");
    std::fs::write(&r, "um yes\n").unwrap();
    std::fs::write(&h, "yes\n").unwrap();
    let out = stdout_of(&["ablate", r.to_str().unwrap(), h.to_str().unwrap()]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[1], "raw\t0.5000\t0.0000\t0.5000");
    assert_eq!(rows[2], "+filler-words\t0.0000\t0.0000\t0.0000");
}

#[test]
fn align_emits_counts_and_ops() {
    let out = stdout_of(&[
        "align",
        &fixture_str("three_word_v.txt"),
        &fixture_str("three_word_nv.txt"),
    ]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["counts"]["deletions"], serde_json::json!(1));
    assert_eq!(report["counts"]["wer"], serde_json::json!(0.3333));
    assert_eq!(report["ops"][1]["op"], serde_json::json!("delete"));
}

#[test]
fn align_per_line_sums_counts() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.txt");
    let h = dir.path().join("h.txt");
    std::fs::write(&r, "a b\nc d\n").unwrap();
    std::fs::write(&h, "a x\nc d y\n").unwrap();
    let out = stdout_of(&["align", "--per-line", r.to_str().unwrap(), h.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["counts"]["substitutions"], serde_json::json!(1));
    assert_eq!(report["counts"]["insertions"], serde_json::json!(1));
    assert_eq!(report["counts"]["reference_words"], serde_json::json!(4));
    assert_eq!(report["lines"].as_array().unwrap().len(), 2);

    std::fs::write(&h, "a x\n").unwrap();
    let out = mrwer(&["align", "--per-line", r.to_str().unwrap(), h.to_str().unwrap()]);
    assert!(!out.status.success(), "line-count mismatch must fail");
}

#[test]
fn steps_flags_apply_in_order_and_reject_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "uh w- what what\n").unwrap();
    let out = stdout_of(&[
        "normalize",
        "--steps",
        "filler-words",
        "--steps",
        "stutters-repetitions",
        input.to_str().unwrap(),
    ]);
    assert_eq!(out, "what\n");
    let out = mrwer(&[
        "normalize",
        "--steps",
        "filler-words,filler-words",
        input.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
}

#[test]
fn data_dir_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "filler_words.txt",
        "contractions.tsv",
        "numbers.tsv",
        "british_american.tsv",
        "filler_phrases.txt",
    ] {
        std::fs::copy(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../multiref/data").join(name),
            dir.path().join(name),
        )
        .unwrap();
    }
    // Extend the filler lexicon and confirm the override takes effect.
    let mut fillers =
        std::fs::read_to_string(dir.path().join("filler_words.txt")).unwrap();
    fillers.push_str("okay\n");
    std::fs::write(dir.path().join("filler_words.txt"), fillers).unwrap();

    let input = dir.path().join("in.txt");
    std::fs::write(&input, "okay um yes\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mrwer"))
        .args(["normalize", "--steps", "filler-words", input.to_str().unwrap()])
        .env("MRWER_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "yes\n");

    let out = Command::new(env!("CARGO_BIN_EXE_mrwer"))
        .args(["normalize", "--steps", "filler-words", input.to_str().unwrap()])
        .env("MRWER_DATA_DIR", dir.path().join("missing"))
        .output()
        .unwrap();
    assert!(!out.status.success(), "bad data dir must fail");
}

#[test]
fn unwritable_output_fails_without_partial_file() {
    let out = mrwer(&[
        "normalize",
        &fixture_str("norm_ladder_input.txt"),
        "-o",
        "/nonexistent-dir/out.txt",
    ]);
    assert!(!out.status.success());
    assert!(!Path::new("/nonexistent-dir/out.txt").exists());
}

#[test]
fn end_to_end_zero_property_via_cli() {
    // build-fst then score with V as the hypothesis: mwer is exactly 0.
    let dir = tempfile::tempdir().unwrap();
    let fst = dir.path().join("fig1.fst");
    let out = mrwer(&[
        "build-fst",
        &fixture_str("fig1_v.txt"),
        &fixture_str("fig1_nv.txt"),
        "-o",
        fst.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = stdout_of(&["score", fst.to_str().unwrap(), &fixture_str("fig1_v.txt")]);
    let value: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(value["mwer"], serde_json::json!(0.0));
}
