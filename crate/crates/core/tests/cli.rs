//! Exit codes and output files of the command-line tool. JSON outputs of
//! `check` and `dw` on the shipped scenarios are compared with the files in
//! `tests/golden`; set `OBLIQUA_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> PathBuf {
    root().join("scenarios").join(name)
}

fn obliqua(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obliqua")).args(args).env_remove("OBLIQUA_TOL_PROFILE").output().unwrap()
}

fn run(args: &[&str], code: i32) -> Output {
    let out = obliqua(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn golden(name: &str, actual: &[u8]) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("OBLIQUA_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(want == actual, "{name} differs from its golden file:\n{}", String::from_utf8_lossy(actual));
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_outputs_match_golden_files() {
    for (name, code) in [
        ("abs_cusp", 0),
        ("half_disc", 0),
        ("half_disc_tangential", 1),
        ("half_plane", 0),
        ("jump_disc", 0),
        ("unit_square", 0),
    ] {
        let path = scenario(&format!("{name}.toml"));
        let out = run(&["check", path.to_str().unwrap()], code);
        golden(&format!("check_{name}.json"), &out.stdout);
        let v = json(&out);
        assert_eq!(v["command"], "check");
        assert_eq!(v["status"], if code == 0 { "Pass" } else { "Fail" });
        let prov = &v["provenance"];
        assert_eq!(prov["scenario_sha256"].as_str().unwrap().len(), 64);
        assert!(prov["tolerances"]["angle_tol"].is_number());
        for r in v["reports"].as_array().unwrap() {
            if r["status"] == "Fail" {
                assert!(!r["witnesses"].as_array().unwrap().is_empty(), "{name}: a failing report without a witness");
            }
        }
    }
}

#[test]
fn dw_outputs_match_golden_files() {
    let out = run(&["dw", scenario("unit_square.toml").to_str().unwrap()], 0);
    golden("dw_unit_square.json", &out.stdout);
    let out = run(&["dw", scenario("square_circulating.toml").to_str().unwrap()], 1);
    golden("dw_square_circulating.json", &out.stdout);
    let v = json(&out);
    assert_eq!(v["status"], "Fail");
    assert_eq!(v["equivalence"], "agree");
}

#[test]
fn non_minimal_polygon_fails_minimality() {
    let tmp = tempfile::tempdir().unwrap();
    // x1 + x2 < 3 is implied by the unit square
    let p = write(
        tmp.path(),
        "p.toml",
        "name = \"redundant\"\nnormals = [[1, 0], [0, 1], [-1, 0], [0, -1], [-1, -1]]\noffsets = [0, 0, -1, -1, -3]\ndirections = [[1, 0], [0, 1], [-1, 0], [0, -1], [-1, -1]]\n",
    );
    let out = obliqua(&["dw", p.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["minimality"]["report"]["status"], "Fail", "{v}");
    assert_eq!(v["minimality"]["redundant"], serde_json::json!([5]));
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn malformed_expression_is_a_config_error_with_a_caret() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("half_disc.toml")).unwrap().replace("psi = \"x2\"", "psi = \"x2 +* 1\"");
    let p = write(tmp.path(), "bad.toml", &text);
    let out = run(&["check", p.to_str().unwrap()], 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("domain.pieces[2].psi"), "{err}");
    assert!(err.contains("x2 +* 1") && err.contains('^'), "{err}");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    run(&["check", missing.to_str().unwrap()], 2);
    let unknown = write(tmp.path(), "u.toml", "name = \"u\"\nfrobnicate = 1\n");
    run(&["check", unknown.to_str().unwrap()], 2);
    let hd = scenario("half_disc.toml");
    run(&["simulate", hd.to_str().unwrap(), "--dt", "-1", "--out", tmp.path().to_str().unwrap()], 2);
    run(&["compare", hd.to_str().unwrap(), "--functional", "nonsense"], 2);
}

#[test]
fn simulate_writes_paths_terminals_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run(
        &["simulate", scenario("half_disc.toml").to_str().unwrap(), "--paths", "40", "--construction", "controlled", "--out", out.to_str().unwrap()],
        0,
    );
    let path0 = std::fs::read_to_string(out.join("paths/path_000000.csv")).unwrap();
    assert_eq!(path0.lines().next().unwrap(), obliqua::sim::CSV_HEADER);
    assert_eq!(path0.lines().count(), 1002);
    let terminal = std::fs::read_to_string(out.join("terminal.csv")).unwrap();
    assert_eq!(terminal.lines().next().unwrap(), "path_id,x1,x2,lambda");
    assert_eq!(terminal.lines().count(), 41);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["construction"], "controlled");
    assert_eq!(v["n_paths"], 40);
    assert_eq!(v["ks_vs_direct"]["reference_seed"], 2);
    assert_eq!(v["provenance"]["seeds"], serde_json::json!([1, 2]));
}

#[test]
fn failing_checks_block_simulation_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("half_disc_tangential.toml");
    let out = tmp.path().join("o");
    run(&["simulate", sc.to_str().unwrap(), "--paths", "4", "--out", out.to_str().unwrap()], 1);
    assert!(!out.join("summary.json").exists());
    let forced = obliqua(&["simulate", sc.to_str().unwrap(), "--paths", "4", "--force", "--out", out.to_str().unwrap()]);
    assert!(matches!(forced.status.code(), Some(0) | Some(4)), "{forced:?}");
}

#[test]
fn compare_reports_a_verdict() {
    let hp = scenario("half_plane.toml");
    let pass = json(&run(&["compare", hp.to_str().unwrap(), "--paths", "200", "--threshold", "1"], 0));
    assert_eq!(pass["verdict"], "pass");
    assert_eq!(pass["constructions"], serde_json::json!(["direct", "controlled"]));
    let fail = json(&run(&["compare", hp.to_str().unwrap(), "--paths", "200", "--threshold", "1e-9"], 1));
    assert_eq!(fail["verdict"], "fail");
    assert!(fail["max_ks"].as_f64().unwrap() > 0.0);
}

#[test]
fn strict_profile_changes_reported_tolerances() {
    let out = Command::new(env!("CARGO_BIN_EXE_obliqua"))
        .args(["check", scenario("half_plane.toml").to_str().unwrap()])
        .env("OBLIQUA_TOL_PROFILE", "strict")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["provenance"]["tolerance_profile"], "strict");
}
