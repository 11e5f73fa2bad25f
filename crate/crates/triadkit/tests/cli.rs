//! End-to-end checks of the batch front door: exit codes, deterministic
//! stdout, and history directories left untouched by failed commands.

use std::path::{Path, PathBuf};

use triadkit::cli::run;

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("samples")
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(args.iter().map(|s| s.to_string()), &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("stdout is utf-8"),
        String::from_utf8(err).expect("stderr is utf-8"),
    )
}

#[test]
fn no_arguments_is_a_usage_error() {
    let (code, _, err) = run_cli(&[]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let (code, _, _) = run_cli(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn eval_matches_the_restrict_oracle_and_is_deterministic() {
    let schema = samples().join("hr_base.tdk");
    let schema = schema.to_str().unwrap();
    let query = "F(s={development,support})(p={IT})";
    let (code, out, err) = run_cli(&["eval", "--schema", schema, "--query", query]);
    assert_eq!(code, 0, "{err}");
    // Oracle: ivanov (development, IT) and petrov (support, IT) survive the
    // filters; sidorov (sales, HR) does not.
    assert_eq!(out, "ivanov\npetrov\n");
    // Identical files and argv give identical stdout bytes.
    let (_, again, _) = run_cli(&["eval", "--schema", schema, "--query", query]);
    assert_eq!(out, again);
}

#[test]
fn json_lines_format_has_stable_keys() {
    let schema = samples().join("hr_base.tdk");
    let (code, out, _) = run_cli(&[
        "eval",
        "--schema",
        schema.to_str().unwrap(),
        "--query",
        "Employee",
        "--format",
        "json-lines",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "{\"kind\":\"item\",\"text\":\"ivanov\"}\n{\"kind\":\"item\",\"text\":\"petrov\"}\n{\"kind\":\"item\",\"text\":\"sidorov\"}\n"
    );
}

#[test]
fn verify_reports_planted_defects_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.tdk");
    // A concept referencing a sort that is never declared parses only as a
    // hand-planted file with the reference spelled out.
    std::fs::write(&path, "sort S = {a};\nconcept C { f: S; };\n").unwrap();
    let (code, out, _) = run_cli(&["verify", "--schema", path.to_str().unwrap()]);
    assert_eq!(code, 0, "clean schema verifies: {out}");

    std::fs::write(&path, "concept C { f: Ghost; };\n").unwrap();
    let (code, _, err) = run_cli(&["verify", "--schema", path.to_str().unwrap()]);
    // The dangling sort is already a resolution diagnostic.
    assert_eq!(code, 1);
    assert!(err.contains("undeclared sort"), "{err}");
}

#[test]
fn merge_history_and_rollback_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("history");
    let history = history.to_str().unwrap();
    let base = samples().join("hr_base.tdk");
    let component = samples().join("vacancies.tdk");

    let (code, out, err) = run_cli(&[
        "merge",
        "--base",
        base.to_str().unwrap(),
        "--component",
        component.to_str().unwrap(),
        "--history",
        history,
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("merged: v1"), "{out}");
    let v0 = std::fs::read_to_string(Path::new(history).join("v0000.tdk")).unwrap();
    let v1 = std::fs::read_to_string(Path::new(history).join("v0001.tdk")).unwrap();
    assert_ne!(v0, v1);

    // Roll back to the pre-merge version: a new version with v0's bytes.
    let (code, out, _) = run_cli(&["rollback", "--history", history, "--to", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("current: v2"), "{out}");
    let v2 = std::fs::read_to_string(Path::new(history).join("v0002.tdk")).unwrap();
    assert_eq!(v0, v2);
}

#[test]
fn rejected_merges_leave_the_history_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("history");
    let history_str = history.to_str().unwrap();
    let base = samples().join("hr_base.tdk");
    let (code, _, _) = run_cli(&[
        "merge",
        "--base",
        base.to_str().unwrap(),
        "--component",
        samples().join("vacancies.tdk").to_str().unwrap(),
        "--history",
        history_str,
    ]);
    assert_eq!(code, 0);
    let manifest_before = std::fs::read_to_string(history.join("manifest")).unwrap();

    // A conflicting sort redefinition is rejected wholesale.
    let conflicting = dir.path().join("conflict.tdk");
    std::fs::write(&conflicting, "sort Position = {Nothing};\n").unwrap();
    let (code, out, _) = run_cli(&[
        "merge",
        "--component",
        conflicting.to_str().unwrap(),
        "--history",
        history_str,
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("rejected"), "{out}");
    let manifest_after = std::fs::read_to_string(history.join("manifest")).unwrap();
    assert_eq!(manifest_before, manifest_after);
}

#[test]
fn replay_prints_one_line_per_event() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.txt");
    std::fs::write(
        &events,
        "dismiss ivanov\nre_enroll ivanov Programming\nenroll ivanov IT\n",
    )
    .unwrap();
    let (code, out, _) = run_cli(&[
        "replay",
        "--schema",
        samples().join("hr_base.tdk").to_str().unwrap(),
        "--events",
        events.to_str().unwrap(),
        "--user",
        "president",
    ]);
    // The third line is illegal (already enrolled) so the exit code is 1.
    assert_eq!(code, 1);
    assert!(out.contains("dismiss ivanov: ok"), "{out}");
    assert!(out.contains("re_enroll ivanov Programming: ok"), "{out}");
    assert!(out.contains("enroll ivanov IT: error"), "{out}");
}

#[test]
fn simulate_session_prints_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let ops = dir.path().join("ops.txt");
    std::fs::write(&ops, "read data HR\nwrite metadata HR\nclose\nread data HR\n").unwrap();
    let (code, out, _) = run_cli(&[
        "simulate-session",
        "--schema",
        samples().join("hr_base.tdk").to_str().unwrap(),
        "--user",
        "hr_clerk",
        "--ops",
        ops.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines,
        vec![
            "read data HR: allow",
            "write metadata HR: deny MetadataForbidden",
            "close: closed",
            "read data HR: deny SessionClosed",
        ]
    );
}

#[test]
fn report_generalization_reproduces_the_metric_behaviour() {
    let (code, out, _) = run_cli(&[
        "report",
        "generalization",
        "--schema",
        samples().join("hr_base.tdk").to_str().unwrap(),
        "--metrics",
        "z,r,q",
        "--assign",
        "s={development,support}",
        "--assign",
        "p={IT,Programming}",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "q: REFINING REFINING\nr: REFINING INERT\nz: REFINING INERT\nverdict: two levels sufficient\n"
    );
}

#[test]
fn enumeration_cap_environment_variable_applies() {
    // The env var is process-global; exercise both sides in one test to
    // avoid races with parallel test threads reading it.
    let schema = samples().join("hr_base.tdk");
    let (code, out, _) = run_cli(&[
        "report",
        "domain",
        "--schema",
        schema.to_str().unwrap(),
        "--sort",
        "LaborFunction",
        "--individuals",
        "ivanov,petrov",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("members: 9\n"), "{out}");

    std::env::set_var("TRIADKIT_MAX_ENUM", "4");
    let (code, _, err) = run_cli(&[
        "report",
        "domain",
        "--schema",
        schema.to_str().unwrap(),
        "--sort",
        "LaborFunction",
        "--individuals",
        "ivanov,petrov",
    ]);
    std::env::remove_var("TRIADKIT_MAX_ENUM");
    assert_eq!(code, 1);
    assert!(err.contains("exceeds the cap of 4"), "{err}");
}
