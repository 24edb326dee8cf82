//! End-to-end tests of the installed binary: flag parsing, config merging,
//! report shape, exit codes, and byte-level determinism.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phiconvex"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf8 stdout"),
        String::from_utf8(out.stderr).expect("utf8 stderr"),
    )
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("phiconvex-cli-{}-{name}", std::process::id()))
}

fn run_json(args: &[&str], name: &str) -> (i32, serde_json::Value) {
    let path = scratch(name);
    let mut full: Vec<&str> = args.to_vec();
    let path_text = path.to_str().expect("utf8 temp path").to_string();
    full.push("--json");
    full.push(&path_text);
    let (code, _, stderr) = run(&full);
    let body = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("report file missing ({e}); stderr: {stderr}"));
    std::fs::remove_file(&path).ok();
    (code, serde_json::from_str(&body).expect("valid JSON report"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, body).expect("config written");
    path
}

#[test]
fn hh_quadratic_equality_case() {
    let (code, json) = run_json(
        &["hh", "--f", "x^2", "--phi", "x", "--c", "1", "--a", "0", "--b", "1"],
        "hh-x2",
    );
    assert_eq!(code, 0);
    assert_eq!(json["verdict"], "holds");
    let third = 1.0 / 3.0;
    for key in ["lower", "mean", "upper"] {
        let v = json["results"][key].as_f64().unwrap();
        assert!((v - third).abs() <= 1e-9, "{key} = {v}");
    }
}

#[test]
fn check_cubic_not_convex() {
    let (code, json) = run_json(
        &["check", "--f", "x^3", "--phi", "x", "--c", "0", "--a", "-1", "--b", "1"],
        "check-x3",
    );
    assert_eq!(code, 1);
    assert_eq!(json["verdict"], "violated");
    let slack = json["witness"]["slack"].as_f64().unwrap();
    assert!(slack <= -0.375, "slack = {slack}");
}

#[test]
fn norm_test_maximum_norm_fails_parallelogram() {
    let (code, json) = run_json(&["norm-test", "--norm", "max", "--dim", "2"], "nt-max");
    assert_eq!(code, 1);
    assert_eq!(json["verdict"], "violated");
    let defect = json["results"]["max_defect"].as_f64().unwrap();
    assert_eq!(defect, 4.0);
    assert_eq!(json["witness"]["slack"].as_f64().unwrap(), -4.0);
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = write_config("minimal.cfg", "command = hh\nf = x^2\na = 0\nb = 1\n");
    let (code, stdout, _) = run(&["--config", cfg.to_str().unwrap()]);
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 0);
    // c defaults to "estimate" and the estimated modulus is echoed.
    assert!(stdout.contains("c: estimate -> "), "stdout: {stdout}");
    assert!(stdout.contains("c_star = "), "stdout: {stdout}");
    assert!(stdout.contains("verdict: holds"), "stdout: {stdout}");
}

#[test]
fn config_estimate_chains_into_hh() {
    let cfg = write_config(
        "estimate.cfg",
        "# exp is strongly convex on [0,1]\ncommand = hh\nf = exp(x)\nc = estimate\na = 0\nb = 1\n",
    );
    let (code, json) = run_json(&["--config", cfg.to_str().unwrap()], "estimate-hh");
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 0);
    let c_star = json["results"]["c_star"].as_f64().unwrap();
    let c_eff = json["inputs"]["c_effective"].as_f64().unwrap();
    assert_eq!(c_star, c_eff);
    assert!((0.5..0.6).contains(&c_star), "c_star = {c_star}");
    assert_eq!(json["inputs"]["c"], "estimate");
}

#[test]
fn flags_beat_config_values() {
    let cfg = write_config("override.cfg", "command = hh\nf = x^2\na = 0\nb = 1\nc = 1\n");
    let (code, json) = run_json(&["--config", cfg.to_str().unwrap(), "hh", "--c", "0.25"], "override");
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 0);
    assert_eq!(json["inputs"]["c"], "0.25");
    let lower = json["results"]["lower"].as_f64().unwrap();
    assert!((lower - (0.25 + 0.25 / 12.0)).abs() <= 1e-12);
}

#[test]
fn config_with_reversed_interval_is_rejected() {
    let cfg = write_config("reversed.cfg", "command = hh\nf = x^2\na = 1\nb = 0\n");
    let (code, _, stderr) = run(&["--config", cfg.to_str().unwrap()]);
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 2);
    assert!(stderr.contains("interval"), "stderr: {stderr}");
}

#[test]
fn config_with_unknown_key_is_rejected() {
    let cfg = write_config("unknown.cfg", "command = hh\nf = x^2\nfrobnicate = 3\n");
    let (code, _, stderr) = run(&["--config", cfg.to_str().unwrap()]);
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown key"), "stderr: {stderr}");
}

#[test]
fn missing_command_is_a_usage_error() {
    let cfg = write_config("nocmd.cfg", "f = x^2\na = 0\nb = 1\n");
    let (code, _, stderr) = run(&["--config", cfg.to_str().unwrap()]);
    std::fs::remove_file(&cfg).ok();
    assert_eq!(code, 2);
    assert!(stderr.contains("command"), "stderr: {stderr}");
}

#[test]
fn unknown_norm_is_a_usage_error() {
    let (code, _, stderr) = run(&["norm-test", "--norm", "banach", "--dim", "2"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown norm"), "stderr: {stderr}");
}

#[test]
fn failed_run_still_writes_error_report_when_asked() {
    let path = scratch("error-report");
    let (code, _, _) = run(&[
        "hh", "--f", "x^2", "--phi", "x", "--a", "1", "--b", "0",
        "--json", path.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).expect("error report written"))
            .expect("valid JSON");
    std::fs::remove_file(&path).ok();
    assert_eq!(json["verdict"], "error");
    assert_eq!(json["command"], "hh");
}

#[test]
fn reports_are_deterministic_modulo_wall_time() {
    let jobs: &[&[&str]] = &[
        &["hh", "--f", "x^2", "--phi", "x", "--c", "1", "--a", "0", "--b", "1"],
        &["check", "--f", "x^3", "--phi", "x", "--c", "0", "--a", "-1", "--b", "1"],
        &["norm-test", "--norm", "max", "--dim", "2", "--sampler", "seeded", "--seed", "7"],
        &["counterexample", "--norm", "max", "--dim", "2", "--c", "1"],
        &["lemma2", "--f", "x1^2+x2^2", "--box", "-1,1", "--dim", "2", "--c", "1"],
    ];
    for (i, job) in jobs.iter().enumerate() {
        let (_, first) = run_json(job, &format!("det-{i}-a"));
        let (_, second) = run_json(job, &format!("det-{i}-b"));
        let strip = |mut v: serde_json::Value| {
            v.as_object_mut().unwrap().remove("wall_ms");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(first), strip(second), "job {job:?} not deterministic");
    }
}
