use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geosimplex")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no error record: {text}"));
    serde_json::from_str(line).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn flat_verify_passes_with_tiny_residual() {
    let out = run(&["verify", "--preset", "flat-4simplex", "--mc-samples", "20000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["status"], "ok");
    let res = r["payload"]["report"]["residual"].as_f64().unwrap();
    let se = r["payload"]["report"]["std_error"].as_f64().unwrap();
    assert!(res.abs() <= 3.0 * se + 1e-12, "{res} vs {se}");
    assert!(r["wall_time_s"].as_f64().is_some());
}

#[test]
fn collinear_vertices_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.txt", "0 0\n1 1\n2 2\n");
    let out = run(&["verify", "--model", "euclidean:2", "--vertices-file", &v]);
    assert_eq!(out.status.code(), Some(3));
    let rec = stderr_record(&out);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["exit_code"], 3);
    assert!(rec["error"]["kind"].as_str().unwrap().starts_with("Degenerate"));
}

#[test]
fn strict_tolerance_with_tiny_budget_exits_4() {
    let out = run(&["verify", "--preset", "regular-h4-side=1", "--mc-samples", "200", "--order", "2", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(4));
    let r = report(&out);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["payload"]["pass"], false);
}

#[test]
fn oracle_paths() {
    let ok = run(&["oracle", "--trials", "200"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(report(&ok)["payload"]["oracle"]["max_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(run(&["oracle", "--trials", "200", "--mutate-psi3"]).status.code(), Some(4));
    let zero = run(&["oracle", "--trials", "0"]);
    assert_eq!(zero.status.code(), Some(2));
    assert_eq!(stderr_record(&zero)["error"]["kind"], "Config");
}

#[test]
fn positive_curvature_budget_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(
        dir.path(),
        "v.json",
        "[[1.4,1.5,1.6,0.3],[1.6,1.5,1.6,0.3],[1.4,1.7,1.6,0.3],[1.4,1.5,1.8,0.3],[1.4,1.5,1.6,0.5]]",
    );
    let out = run(&["budget", "--model", "sphere:4", "--vertices-file", &v]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["error"]["kind"], "PositiveCurvatureModel");
}

#[test]
fn flat_budget_has_constant_two() {
    let out = run(&["budget", "--preset", "flat-4simplex", "--mc-samples", "40000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let b = &r["payload"]["simplices"][0]["budget"];
    let se = b["vertex_std_error"].as_f64().unwrap();
    assert!((b["bound_constant"].as_f64().unwrap() - 2.0).abs() <= 4.0 * se);
    // finite-difference frames leave roundoff well below the MC noise
    assert!(b["edge_term"].as_f64().unwrap().abs() < 1e-9);
    assert!(b["two_face_term"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(r["payload"]["chi_bound"]["within"], true);
}

#[test]
fn chain_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.toml",
        r#"
        seed = 4
        [budgets]
        mc_samples = 5000
        simplex_order = 3
        [[chain]]
        id = "a"
        coefficient = "3/2"
        preset = "flat-4simplex"
        [[chain]]
        id = "b"
        coefficient = "-1"
        preset = "regular-h4-side=1"
        "#,
    );
    let out = run(&["budget", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let chi = &report(&out)["payload"]["chi_bound"];
    assert!((chi["l1"].as_f64().unwrap() - 2.5).abs() < 1e-15);
    assert!((chi["eleven_times_l1"].as_f64().unwrap() - 27.5).abs() < 1e-12);
}

#[test]
fn two_d_csv_table() {
    let out = run(&["2d", "--format", "csv", "--preset", "s2-octant", "--preset", "flat-triangle"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "model,vertices,curv_integral,sum_alpha,residual");
    let octant: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k: f64 = octant[2].parse().unwrap();
    assert!((k - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    let flat: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(flat[4].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn bad_arguments_exit_2_with_a_record() {
    let out = run(&["verify", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["status"], "error");
    assert_eq!(run(&["verify", "--model", "torus:4", "--preset", "x"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn fixed_seed_gives_identical_payloads() {
    let args = ["verify", "--preset", "h2xh2-4simplex", "--mc-samples", "3000", "--order", "3", "--seed", "21"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), b.status.code());
    let (ra, rb) = (report(&a), report(&b));
    assert_eq!(serde_json::to_string(&ra["payload"]).unwrap(), serde_json::to_string(&rb["payload"]).unwrap());
    let other =
        report(&run(&["verify", "--preset", "h2xh2-4simplex", "--mc-samples", "3000", "--order", "3", "--seed", "22"]));
    assert_ne!(ra["payload"]["report"]["total"], other["payload"]["report"]["total"]);
}

#[test]
fn reports_are_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.json");
    fs::write(&path, "stale").unwrap();
    let p = path.to_string_lossy().into_owned();
    let out = run(&["oracle", "--trials", "20", "--out", &p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "oracle");
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 1, "temporary files left behind: {names:?}");
    let missing = dir.path().join("no/such/dir/r.json");
    assert_eq!(run(&["oracle", "--trials", "5", "--out", &missing.to_string_lossy()]).status.code(), Some(2));
}
