use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn jobs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../jobs")
}

fn twist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twist")).args(args).output().expect("binary runs")
}

fn job(name: &str) -> String {
    jobs().join(name).to_string_lossy().into_owned()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_job(dir: &Path, body: &str) -> String {
    let p = dir.join("job.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn ax_plus_b_twist_passes() {
    let out = twist(&["--job", &job("ax_plus_b_twist.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_stdout(&out);
    assert_eq!(report["command"], "twist");
    assert_eq!(report["passed"], true);
}

#[test]
fn ax_plus_b_has_no_second_cohomology() {
    let out = twist(&["--job", &job("ax_plus_b_cohomology.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_stdout(&out);
    assert_eq!(report["result"]["dimension"], 0);
}

#[test]
fn broken_twist_exits_with_two() {
    let out = twist(&["--job", &job("abelian_broken_twist.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_stdout(&out)["passed"], false);
}

#[test]
fn schema_errors_carry_a_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_job(dir.path(), r#"{"version": 1, "command": "twist", "lie": {"catalog": "ax+b"}, "order": "three"}"#);
    let out = twist(&["--job", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    let err = json_stdout(&out);
    assert_eq!(err["error"]["kind"], "schema");
    assert_eq!(err["error"]["pointer"], "/order");
    assert_eq!(err["exit_code"], 3);

    let path = write_job(dir.path(), r#"{"lie": {"catalog": "ax+b"}, "colour": 1}"#);
    let out = twist(&["check", "--job", &path, "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json_stdout(&out)["error"]["pointer"], "/colour");
}

#[test]
fn usage_errors_exit_with_three() {
    assert_eq!(twist(&["frobnicate", "--job", &job("ax_plus_b_twist.json")]).status.code(), Some(3));
    assert_eq!(twist(&["twist"]).status.code(), Some(3));
    assert_eq!(twist(&["--job", "/nonexistent/job.json", "check"]).status.code(), Some(3));
    assert_eq!(twist(&["--bogus-flag"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let path = write_job(dir.path(), "{ not json");
    assert_eq!(twist(&["check", "--job", &path]).status.code(), Some(3));
}

#[test]
fn broken_jacobi_is_a_certificate_failure() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "command": "twist",
        "lie": {"dim": 3,
                "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1}, {"i": 2, "j": 3, "k": 1, "c": 1}, {"i": 3, "j": 1, "k": 1, "c": 1}],
                "r": [{"i": 1, "j": 2, "c": 1}]}
    }"#;
    let path = write_job(dir.path(), body);
    assert_eq!(twist(&["--job", &path]).status.code(), Some(2));
}

#[test]
fn out_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = twist(&["--job", &job("ax_plus_b_cohomology.json"), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("cohomology.json")).unwrap()).unwrap();
    assert_eq!(written["passed"], true);
    assert!(written["job_hash"].as_str().is_some_and(|h| h.len() == 64));
}

#[test]
fn results_do_not_depend_on_threads() {
    for name in ["ax_plus_b_twist.json", "ax_plus_b_compare.json", "plane_hermitian.json"] {
        let one = twist(&["--job", &job(name), "--format", "json", "--threads", "1"]);
        let many = twist(&["--job", &job(name), "--format", "json", "--threads", "6"]);
        assert_eq!(one.status.code(), Some(0), "{name}");
        assert_eq!(one.stdout, many.stdout, "{name}");
    }
}

#[test]
fn order_flag_overrides_the_job() {
    let out = twist(&["--job", &job("ax_plus_b_twist.json"), "--order", "2", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_stdout(&out)["order"], 2);
    assert_eq!(twist(&["--job", &job("ax_plus_b_twist.json"), "--order", "99"]).status.code(), Some(3));
}

#[test]
fn selftest_passes() {
    let out = twist(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("selftest: pass"));
}

#[test]
fn every_example_job_runs() {
    for entry in std::fs::read_dir(jobs()).unwrap() {
        let path = entry.unwrap().path();
        let code = twist(&["--job", path.to_str().unwrap()]).status.code();
        let expected = if path.file_name().unwrap() == "abelian_broken_twist.json" { 2 } else { 0 };
        assert_eq!(code, Some(expected), "{}", path.display());
    }
}
