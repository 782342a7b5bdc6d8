use std::io::Cursor;
use std::process::Command;

use dynrbac::cli::{run, EXIT_BOUND, EXIT_DATA, EXIT_DENY, EXIT_NO_INPUT, EXIT_OK, EXIT_VIOLATIONS};

fn call(args: &[&str]) -> (i32, String, String) {
    call_with_stdin(args, "")
}

fn call_with_stdin(args: &[&str], stdin: &str) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("dynrbac")
        .chain(args.iter().copied())
        .map(String::from)
        .collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut Cursor::new(stdin.as_bytes()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_ref1_with_two_reports() {
    let (code, out, _) = call(&["check", "corpus:rms_ref1", "--reports", "2"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("25"), "{out}");
}

#[test]
fn decide_after_submit_denies_write() {
    let (code, out, _) = call(&[
        "decide",
        "corpus:rms_ref2",
        "--state-after",
        "CreateReport u1 r1; SubmitReport u1 r1",
        "--user",
        "u1",
        "--right",
        "W",
        "--object",
        "r1",
    ]);
    assert_eq!(code, EXIT_DENY);
    assert_eq!(out.lines().next(), Some("Deny"));
}

#[test]
fn decide_on_created_report_allows_owner() {
    let (code, out, _) = call(&[
        "decide",
        "corpus:rms_ref2",
        "--state-after",
        "CreateReport u1 r1",
        "--user",
        "u1",
        "--right",
        "D",
        "--object",
        "r1",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.lines().next(), Some("Allow"));
}

#[test]
fn decide_with_explicit_context() {
    let (code, out, _) = call(&[
        "decide",
        "corpus:rms_ref2",
        "--context",
        "corpus:rms_users",
        "--state-after",
        "CreateReport u1 r1; SubmitReport u1 r1",
        "--user",
        "c1",
        "--right",
        "W",
        "--object",
        "r1",
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn missing_file() {
    let (code, _, err) = call(&["check", "nonexistent.pol"]);
    assert_eq!(code, EXIT_NO_INPUT);
    assert!(err.contains("nonexistent.pol"), "{err}");
}

#[test]
fn records_format_is_json_lines() {
    let (code, out, _) = call(&["check", "corpus:rms_abs", "--format", "records"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    assert!(lines
        .iter()
        .all(|v| v["kind"].is_string() && v["status"] == "discharged"));
    assert_eq!(lines[0]["kind"], "Init");
}

#[test]
fn worker_count_does_not_change_output() {
    let (c1, o1, _) = call(&["check", "corpus:rms_ref2", "--workers", "1"]);
    let (c4, o4, _) = call(&["check", "corpus:rms_ref2", "--workers", "4"]);
    assert_eq!((c1, &o1), (c4, &o4));
}

#[test]
fn simulation_is_seeded() {
    let a = call(&["simulate", "corpus:rms_ref1", "--seed", "7", "--steps", "15"]);
    let b = call(&["simulate", "corpus:rms_ref1", "--seed", "7", "--steps", "15"]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a.1, b.1);
    assert!(!a.1.is_empty());
}

#[test]
fn interactive_simulation_reads_choices() {
    let (code, out, _) = call_with_stdin(
        &["simulate", "corpus:rms_abs", "--steps", "2", "--interactive"],
        "1\n1\n",
    );
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("Create"), "{out}");
}

#[test]
fn exported_corpus_validates_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = call(&["corpus", "export", d]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().count(), 4);

    let ref2 = dir.path().join("rms_ref2.pol");
    let (code, out, err) = call(&["validate", ref2.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");

    let abs = dir.path().join("rms_abs.pol");
    let ref1 = dir.path().join("rms_ref1.pol");
    let (code, out, _) = call(&["refine", abs.to_str().unwrap(), ref1.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn validate_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.pol");
    std::fs::write(
        &p,
        "machine Bad\nset S = {a}\nvariable x : set of S\ninit x := {b} end\nend\n",
    )
    .unwrap();
    let (code, _, err) = call(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_VIOLATIONS);
    assert!(err.contains('b'), "{err}");
}

#[test]
fn parse_error_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.pol");
    std::fs::write(&p, "machine M\nvariable x : set of S\ninit x {} end\nend\n").unwrap();
    let (code, _, err) = call(&["parse", p.to_str().unwrap()]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("3:"), "{err}");
}

#[test]
fn deadlock_final_states() {
    let (code, out, _) = call(&["check", "corpus:rms_abs", "--deadlock-final", "true"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out, _) = call(&["check", "corpus:rms_abs", "--deadlock-final", "false"]);
    assert_eq!(code, EXIT_VIOLATIONS, "{out}");
    assert!(out.contains("DLF"), "{out}");
}

#[test]
fn state_cap() {
    let (code, _, _) = call(&["check", "corpus:rms_ref2", "--max-states", "10"]);
    assert_eq!(code, EXIT_BOUND);
}

#[test]
fn refine_requires_link() {
    let (code, _, err) = call(&["refine", "corpus:rms_ref1", "corpus:rms_abs"]);
    assert_eq!(code, EXIT_DATA, "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dynrbac");
    let out = Command::new(bin).args(["check", "nonexistent.pol"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_NO_INPUT));
    assert!(out.stdout.is_empty());
    let out = Command::new(bin).args(["corpus", "list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
}
