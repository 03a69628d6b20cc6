use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mintykit::cli::{self, Outcome, Report, EXIT_FAILS, EXIT_HOLDS, EXIT_INPUT};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mintykit"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["mintykit"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn report(stdout: &str) -> Report {
    serde_json::from_str(stdout).expect("stdout is a JSON report")
}

fn path(rel: &str) -> String {
    repo(rel).to_string_lossy().into_owned()
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    let (code, out, _) = run(&[
        "check",
        &path("instances/identity.json"),
        "--kind",
        "monotone",
    ]);
    assert_eq!(code, EXIT_HOLDS);
    assert!(matches!(report(&out).outcome, Outcome::Check { ref verdict, .. } if verdict.holds));

    let (code, out, _) = run(&["check", &path("instances/cubic.json"), "--kind", "monotone"]);
    assert_eq!(code, EXIT_FAILS);
    let Outcome::Check { verdict, .. } = report(&out).outcome else {
        panic!("check outcome")
    };
    let v = verdict.violation.unwrap();
    assert_eq!((v.first.entry, v.second.entry, v.value), (0, 1, -3.0));

    let (code, _, _) = run(&[
        "check",
        &path("instances/cubic.json"),
        "--kind",
        "quasimonotone",
    ]);
    assert_eq!(code, EXIT_HOLDS);
}

#[test]
fn report_round_trips_through_json() {
    for args in [
        vec!["kkm", "instances/witness.json", "--xstar", "-0.5"],
        vec!["mvi", "instances/witness.json", "--xstar", "-0.5"],
        vec!["witness", "instances/cubic.json"],
        vec![
            "check",
            "instances/rotation_2d.json",
            "--kind",
            "quasimonotone",
        ],
    ] {
        let mut args: Vec<String> = args.into_iter().map(String::from).collect();
        args[1] = path(&args[1]);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (_, out, _) = run(&refs);
        let parsed = report(&out);
        let again = serde_json::to_string_pretty(&parsed).unwrap();
        assert_eq!(report(&again), parsed);
    }
}

#[test]
fn witness_fixture_reproduces_the_counterexample() {
    let (code, out, _) = run(&["kkm", &path("instances/witness.json"), "--xstar", "-0.5"]);
    assert_eq!(code, EXIT_FAILS);
    let Outcome::Kkm { verdict, .. } = report(&out).outcome else {
        panic!("kkm outcome")
    };
    assert!((verdict.counterexample.unwrap().point[0] - 0.5).abs() < 1e-9);

    let (code, out, _) = run(&["witness", &path("instances/cubic.json")]);
    assert_eq!(code, EXIT_HOLDS);
    let Outcome::Witness { witness, a, b, .. } = report(&out).outcome else {
        panic!("witness outcome")
    };
    assert_eq!(witness.unwrap().zstar[0], 1.5);
    assert_eq!((a, b), (Some(1.5), Some(-1.5)));
}

#[test]
fn witness_on_monotone_input_reports_no_pair() {
    let (code, _, err) = run(&["witness", &path("instances/identity.json")]);
    assert_eq!(code, EXIT_FAILS);
    assert!(err.contains("no violation pair"), "{err}");
}

#[test]
fn mvi_with_explicit_polytope() {
    let file = path("instances/witness.json");
    let (code, out, _) = run(&["mvi", &file, "--xstar", "-0.5"]);
    assert_eq!(code, EXIT_FAILS);
    let Outcome::Mvi { result, .. } = report(&out).outcome else {
        panic!("mvi outcome")
    };
    assert_eq!(result.certificate().unwrap().active, vec![0, 1]);

    let (code, out, _) = run(&["mvi", &file, "--xstar", "-0.5", "--K", "[[5],[6]]"]);
    assert_eq!(code, EXIT_HOLDS);
    let Outcome::Mvi { result, .. } = report(&out).outcome else {
        panic!("mvi outcome")
    };
    assert_eq!(result.witness().unwrap()[0], 5.0);
}

#[test]
fn dimension_errors_name_the_entry() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_temp(
        &dir,
        "bad.json",
        r#"{"dim": 2, "points": [{"x": [0, 0], "duals": [[1, 0]]}, {"x": [1], "duals": [[0, 1]]}]}"#,
    );
    let (code, out, err) = run(&["check", &bad, "--kind", "monotone"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(err.contains("entry 1"), "{err}");

    let (code, _, err) = run(&["kkm", &path("instances/identity.json"), "--xstar", "1,2"]);
    assert_eq!(code, EXIT_INPUT);
    assert!(!err.is_empty());
}

#[test]
fn missing_or_malformed_input_is_exit_two() {
    let (code, _, _) = run(&["check", "/nonexistent/instance.json", "--kind", "monotone"]);
    assert_eq!(code, EXIT_INPUT);
    let dir = tempfile::tempdir().unwrap();
    let junk = write_temp(&dir, "junk.json", "{ not json");
    let (code, _, _) = run(&["witness", &junk]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn selection_cap_is_read_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    // two duals at each of three points: eight selections
    let multi = write_temp(
        &dir,
        "multi.json",
        r#"{"dim": 1, "points": [
            {"x": [0], "duals": [[0], [-1]]},
            {"x": [1], "duals": [[1], [2]]},
            {"x": [2], "duals": [[2], [3]]}]}"#,
    );
    let capped: Output = bin()
        .args(["kkm", &multi, "--xstar", "0"])
        .env("MINTYKIT_SELECTION_CAP", "4")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(EXIT_INPUT));
    assert!(String::from_utf8_lossy(&capped.stderr).contains('8'));

    let roomy = bin()
        .args(["kkm", &multi, "--xstar", "0"])
        .env("MINTYKIT_SELECTION_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(roomy.status.code(), Some(EXIT_HOLDS));

    let garbage = bin()
        .args(["kkm", &multi, "--xstar", "0"])
        .env("MINTYKIT_SELECTION_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(garbage.status.code(), Some(EXIT_INPUT));
}

#[test]
fn render_writes_an_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("gamma.svg");
    let (code, out, _) = run(&[
        "render",
        &path("instances/band_2d.json"),
        "--xstar",
        "0,0",
        "--out",
        &svg.to_string_lossy(),
    ]);
    assert_eq!(code, EXIT_HOLDS);
    let Outcome::Render { summary, .. } = report(&out).outcome else {
        panic!("render outcome")
    };
    assert_eq!(summary.hull_cells, summary.covered_cells);
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg") && body.trim_end().ends_with("</svg>"));

    let (code, _, _) = run(&[
        "render",
        &path("instances/cubic.json"),
        "--xstar",
        "0",
        "--out",
        &svg.to_string_lossy(),
    ]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = run(&[
        "render",
        &path("instances/band_2d.json"),
        "--xstar",
        "0,0",
        "--out",
        "/nonexistent/dir/x.svg",
    ]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn suite_exit_codes() {
    let (code, out, _) = run(&["suite", &path("configs/smoke_suite.json")]);
    assert_eq!(code, EXIT_HOLDS);
    let Outcome::Suite(s) = report(&out).outcome else {
        panic!("suite outcome")
    };
    assert!(s.passed() && s.suites.len() == 2);

    // tolerances wide enough to mask violations make the self-test fail
    let (code, out, _) = run(&["suite", &path("configs/corrupted_tolerance.json")]);
    assert_eq!(code, EXIT_FAILS);
    let Outcome::Suite(s) = report(&out).outcome else {
        panic!("suite outcome")
    };
    assert!(s.total_failures > 0 && !s.failing_seeds.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let empty = write_temp(&dir, "empty.json", r#"{"suites": []}"#);
    let (code, _, _) = run(&["suite", &empty]);
    assert_eq!(code, EXIT_HOLDS);

    let bad = write_temp(
        &dir,
        "bad.json",
        r#"{"suites": [], "tolerance": {"eq_tol": -1}}"#,
    );
    let (code, _, _) = run(&["suite", &bad]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn suite_seed_offset_changes_the_instances() {
    let cfg = path("configs/smoke_suite.json");
    let (_, a, _) = run(&["suite", &cfg]);
    let (_, b, _) = run(&["suite", &cfg, "--seed", "0"]);
    let (_, c, _) = run(&["suite", &cfg, "--seed", "17"]);
    assert_eq!(report(&a).without_timing(), report(&b).without_timing());
    assert_ne!(report(&a).without_timing(), report(&c).without_timing());
}

#[test]
fn text_format_is_one_line() {
    let (code, out, _) = run(&[
        "check",
        &path("instances/identity.json"),
        "--kind",
        "monotone",
        "--format",
        "text",
    ]);
    assert_eq!(code, EXIT_HOLDS);
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn tolerance_flags_reach_the_report() {
    let (_, out, _) = run(&[
        "check",
        &path("instances/identity.json"),
        "--kind",
        "monotone",
        "--eq-tol",
        "1e-6",
        "--strict-margin",
        "1e-5",
    ]);
    let r = report(&out);
    assert_eq!(
        (r.tolerances.eq_tol, r.tolerances.strict_margin),
        (1e-6, 1e-5)
    );
    let (code, _, _) = run(&[
        "check",
        &path("instances/identity.json"),
        "--kind",
        "monotone",
        "--eq-tol",
        "-1",
    ]);
    assert_eq!(code, EXIT_INPUT);
}
