//! End-to-end runs of the `tflow` binary.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2, TAU};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tflow"))
        .args(args)
        .env_remove("TFLOW_SEED")
        .output()
        .expect("failed to launch tflow")
}

fn run_ok(dir: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--out", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = tflow(&full);
    assert!(
        out.status.success(),
        "tflow {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    report(dir)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

/// Header and numeric rows of a CSV written by tflow.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn golden_headers_and_manifest_line() {
    let root = TempDir::new().unwrap();
    let cfg = write_config(&root, "c.json", r#"{"t_final": 1.0, "omega0": 2.5}"#);
    let cases: Vec<(&str, Vec<&str>, Vec<(&str, &str)>)> = vec![
        (
            "two-level",
            vec!["two-level", "--t-end", "3", "--points", "50", "--numeric", "--protocol", "100"],
            vec![
                ("series.csv", "time,p1,p1_numeric"),
                ("tf.csv", "time,pi_tf,pi_closed,segment"),
                ("protocol.csv", "time,successes,frequency,p1_exact"),
                ("protocol_tf.csv", "time,pi_hat,pi_exact"),
            ],
        ),
        (
            "sta",
            vec!["sta", "--alpha", "2", "--points", "101", "--numeric"],
            vec![("series.csv", "time,p_plus,p_plus_numeric"), ("tf.csv", "time,pi_toa")],
        ),
        (
            "lambda",
            vec!["lambda", "--omega1", "1", "--omega2", "1", "--delta-i", "-10", "--delta-f", "10", "--t-final", "4", "--points", "400"],
            vec![("series.csv", "time,p1,p2,p3"), ("tf.csv", "time,pi1,pi2,pi3,pi2_current")],
        ),
        (
            "dephasing",
            vec!["dephasing", "--gamma", "1", "--points", "200"],
            vec![("series.csv", "time,p_minus,p_minus_exact"), ("tf.csv", "time,pi_tf,pi_exact")],
        ),
        (
            "hadamard",
            vec!["hadamard", "--omega0", "6.283185307179586", "--points", "200"],
            vec![("series.csv", "time,p_plus,p_plus_closed"), ("tf.csv", "time,pi_tf,pi_current")],
        ),
        (
            "optimize",
            vec!["optimize", cfg.as_str()],
            vec![("series.csv", "time,omega,p1"), ("tf.csv", "time,pi_tf")],
        ),
    ];
    for (name, args, files) in cases {
        let dir = root.path().join(name);
        let r = run_ok(&dir, &args);
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["bounds", "diagnostics", "inputs", "manifest", "results", "series_files"], "{name}");
        assert_eq!(r["manifest"]["command"], name);
        let listed: Vec<&str> = r["series_files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        assert_eq!(listed, files.iter().map(|f| f.0).collect::<Vec<_>>(), "{name}");
        for (file, expected) in files {
            let path = dir.join(file);
            assert_eq!(header(&path), expected, "{name}/{file}");
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 1);
            assert_eq!(text.lines().last().unwrap(), "# manifest: report.json");
        }
    }
}

#[test]
fn two_level_ground_state_mean_is_half_window() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(dir.path(), &["two-level", "--t-end", &PI.to_string(), "--points", "1000"]);
    let tf = &r["results"]["tf"];
    assert!(rel(num(&tf["mean"]), FRAC_PI_2) < 1e-6);
    let std = FRAC_PI_2 * (1.0 - 8.0 / (PI * PI)).sqrt();
    assert!(rel(num(&tf["std"]), std) < 1e-4);
    assert!(r["results"]["boundaries"].as_array().unwrap().is_empty());
    assert!(r["bounds"].is_null());
}

#[test]
fn two_level_tilted_state_has_boundary_at_pi_over_three() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(
        dir.path(),
        &[
            "two-level",
            "--theta",
            &FRAC_PI_3.to_string(),
            "--phi",
            &FRAC_PI_2.to_string(),
            "--t-end",
            &PI.to_string(),
            "--points",
            "1000",
        ],
    );
    let b = r["results"]["boundaries"].as_array().unwrap();
    assert_eq!(b.len(), 1);
    assert!((num(&b[0]) - FRAC_PI_3).abs() <= PI / 999.0);
    let segments = r["results"]["segments"].as_array().unwrap();
    assert_eq!(segments[0]["kind"], "TOD");
    assert_eq!(segments[1]["kind"], "TOA");
    let kinds: Vec<String> = read_csv(&dir.path().join("tf.csv")).1.iter().map(|r| r[3].clone()).collect();
    assert_eq!(kinds.first().unwrap(), "TOD");
    assert_eq!(kinds.last().unwrap(), "TOA");
}

#[test]
fn two_level_numeric_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(
        dir.path(),
        &["two-level", "--theta", "0.7", "--phi", "4", "--coefficients", "0.3,-0.05", "--t-end", "4", "--numeric"],
    );
    assert!(num(&r["results"]["numeric"]["max_deviation"]) < 1e-7);

    let out = tflow(&["--out", dir.path().to_str().unwrap(), "two-level", "--phi", "-1.2", "--t-end", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = tflow(&["two-level"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn flat_population_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = tflow(&["--out", dir.path().to_str().unwrap(), "two-level", "--omega0", "0", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn protocol_is_seeded() {
    let root = TempDir::new().unwrap();
    let args = ["two-level", "--t-end", "3.14", "--points", "100", "--protocol", "10000"];
    let a = root.path().join("a");
    let b = root.path().join("b");
    let c = root.path().join("c");
    run_ok(&a, &[&["--seed", "5"][..], &args].concat());
    let env_run = Command::new(env!("CARGO_BIN_EXE_tflow"))
        .args([&["--out", b.to_str().unwrap()][..], &args].concat())
        .env("TFLOW_SEED", "5")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    run_ok(&c, &[&["--seed", "6"][..], &args].concat());
    let read = |d: &Path| fs::read(d.join("protocol.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(report(&b)["manifest"]["seed"], 5);

    let flag_wins = Command::new(env!("CARGO_BIN_EXE_tflow"))
        .args([&["--out", c.to_str().unwrap(), "--seed", "5"][..], &args].concat())
        .env("TFLOW_SEED", "99")
        .output()
        .unwrap();
    assert!(flag_wins.status.success());
    assert_eq!(read(&a), read(&c));
}

#[test]
fn sta_linear_ramp_moments() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(dir.path(), &["sta", "--alpha", "1", "--t-final", "1"]);
    assert!((num(&r["results"]["mean"]) - 0.363).abs() < 5e-4);
    assert!((num(&r["results"]["std"]) - 0.240).abs() < 5e-4);
    assert!(rel(num(&r["results"]["mean"]), 1.0 - 2.0 / PI) < 1e-9);
}

#[test]
fn sta_steeper_ramp_arrives_later() {
    let root = TempDir::new().unwrap();
    let one = run_ok(&root.path().join("1"), &["sta", "--alpha", "1"]);
    let ten = run_ok(&root.path().join("10"), &["sta", "--alpha", "10"]);
    let (m1, m10) = (num(&one["results"]["mean"]), num(&ten["results"]["mean"]));
    assert!(m10 > m1 && 1.0 - m10 < 1.0 - m1);
}

#[test]
fn sta_numeric_propagation_is_exact() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(dir.path(), &["sta", "--alpha", "0.7", "--omega0", "20", "--numeric"]);
    assert!(num(&r["results"]["numeric"]["max_deviation"]) <= 1e-5);
    let p = column(&dir.path().join("series.csv"), "p_plus");
    let q = column(&dir.path().join("series.csv"), "p_plus_numeric");
    assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-5));
}

#[test]
fn sta_rejects_nonpositive_alpha() {
    for alpha in ["0", "-1"] {
        let dir = TempDir::new().unwrap();
        let out = tflow(&["--out", dir.path().to_str().unwrap(), "sta", "--alpha", alpha]);
        assert_eq!(out.status.code(), Some(2), "alpha {alpha}");
    }
}

fn lambda_args(t_final: &str) -> Vec<&str> {
    vec![
        "--units", "mhz-cyclic", "lambda", "--omega1", "1", "--omega2", "1", "--delta-i", "-10", "--delta-f", "10",
        "--t-final", t_final, "--points", "8001",
    ]
}

/// Largest deviation of `v` from its moving average over `window` samples.
fn oscillation(v: &[f64], window: usize) -> f64 {
    (window..v.len() - window)
        .map(|i| {
            let lo = i - window / 2;
            let avg = v[lo..lo + window].iter().sum::<f64>() / window as f64;
            (v[i] - avg).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn lambda_sweep_conserves_population_and_slows_down() {
    let root = TempDir::new().unwrap();
    let fast_dir = root.path().join("fast");
    let slow_dir = root.path().join("slow");
    let fast = run_ok(&fast_dir, &lambda_args("4"));
    let slow = run_ok(&slow_dir, &lambda_args("40"));
    for r in [&fast, &slow] {
        assert!(num(&r["results"]["population_sum_drift"]) <= 1e-8);
        assert_eq!(r["results"]["dark_state_check"]["passed"], true);
        assert!(num(&r["results"]["current_route"]["sup_distance_to_finite_difference"]) <= 5.0 * 4.0 / 8000.0);
    }
    let p_fast = num(&fast["results"]["landau_zener_probability"]);
    let p_slow = num(&slow["results"]["landau_zener_probability"]);
    assert!(p_slow < p_fast);

    let pi2_fast = column(&fast_dir.join("tf.csv"), "pi2");
    let pi2_slow = column(&slow_dir.join("tf.csv"), "pi2");
    assert!(oscillation(&pi2_slow, 200) < oscillation(&pi2_fast, 200));

    let p = ["p1", "p2", "p3"].map(|c| column(&fast_dir.join("series.csv"), c));
    for j in 0..p[0].len() {
        assert!((p[0][j] + p[1][j] + p[2][j] - 1.0).abs() <= 1e-8);
    }
}

#[test]
fn lambda_units_flag_scales_frequencies() {
    let root = TempDir::new().unwrap();
    let cyclic = root.path().join("cyclic");
    let angular = root.path().join("angular");
    run_ok(&cyclic, &lambda_args("4"));
    let w = TAU.to_string();
    let d = (TAU * 10.0).to_string();
    let neg = (-TAU * 10.0).to_string();
    run_ok(
        &angular,
        &["lambda", "--omega1", &w, "--omega2", &w, "--delta-i", &neg, "--delta-f", &d, "--t-final", "4", "--points", "8001"],
    );
    assert_eq!(report(&cyclic)["manifest"]["params"], report(&angular)["manifest"]["params"]);
    assert_eq!(fs::read(cyclic.join("series.csv")).unwrap(), fs::read(angular.join("series.csv")).unwrap());
}

#[test]
fn lambda_rejects_sweep_without_crossing() {
    let dir = TempDir::new().unwrap();
    let out = tflow(&[
        "--out", dir.path().to_str().unwrap(), "lambda", "--omega1", "1", "--omega2", "1", "--delta-i", "0",
        "--delta-f", "10", "--t-final", "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dephasing_bounds() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(dir.path(), &["dephasing", "--gamma", "1"]);
    let b = &r["bounds"];
    assert!(rel(num(&b["tau_tf"]), 1.0 / (2.0 * SQRT_2)) < 1e-6);
    assert!(rel(num(&b["tau_mt"]), 1.0 / SQRT_2) < 1e-12);
    assert!(rel(num(&b["measured"]["delta_t"]), 0.5) < 0.01);
    assert!(rel(num(&r["results"]["ratio_to_spread_bound"]), 3.0 * 6f64.sqrt()) < 1e-3);
    assert!(b["satisfied"].as_object().unwrap().values().all(|v| v == true));
}

#[test]
fn dephasing_requires_positive_rate() {
    let dir = TempDir::new().unwrap();
    let out = tflow(&["--out", dir.path().to_str().unwrap(), "dephasing", "--gamma", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hadamard_closed_trace_term() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(dir.path(), &["hadamard", "--omega0", &TAU.to_string()]);
    assert!(rel(num(&r["bounds"]["trace_term"]), PI * PI) < 1e-12);
    let p = column(&dir.path().join("series.csv"), "p_plus");
    let closed = column(&dir.path().join("series.csv"), "p_plus_closed");
    assert!(p.iter().zip(&closed).all(|(a, b)| (a - b).abs() < 1e-7));
}

#[test]
fn hadamard_dephasing_sweep_respects_bound() {
    for g in ["0", "5", "10"] {
        let dir = TempDir::new().unwrap();
        let r = run_ok(dir.path(), &["--units", "mhz-cyclic", "hadamard", "--omega0", "10", "--gamma", g]);
        let b = &r["bounds"];
        let gamma = TAU * g.parse::<f64>().unwrap();
        let w = TAU * 10.0;
        assert!(rel(num(&b["trace_term"]), w * w / 4.0 + gamma * gamma / 2.0) < 1e-12);
        let bound = num(&b["delta_theta"]) / (3.0 * 3f64.sqrt() * num(&b["trace_term"]).sqrt());
        assert!(num(&b["measured"]["delta_t"]) >= bound, "gamma/2pi = {g}");
        assert_eq!(b["satisfied"]["qsl_spread"], true);
    }
}

#[test]
fn optimize_feasible_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &format!(r#"{{"t_final": 1.0, "omega0": {}}}"#, 0.8 * PI));
    let r = run_ok(&dir.path().join("out"), &["optimize", &cfg]);
    let res = &r["results"];
    assert!(num(&res["final_population"]) >= 0.999);
    assert_eq!(res["n_false"], 0);
    assert_eq!(res["monotonicity_constrained"], true);
    assert_eq!(r["manifest"]["params"]["config"]["lambda_mono"], 1.0);
}

#[test]
fn optimize_without_monotonicity_penalty_is_flagged() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"t_final": 1.0, "omega0": 2.5, "lambda_mono": 0}"#);
    let r = run_ok(&dir.path().join("out"), &["optimize", &cfg]);
    assert_eq!(r["results"]["monotonicity_constrained"], false);
    assert!(r["diagnostics"].as_array().unwrap().iter().any(|d| d.as_str().unwrap().contains("unconstrained")));
}

#[test]
fn optimize_malformed_config_reports_position() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", "{\n  \"t_final\": 1.0,\n  \"omega0\": ,\n}\n");
    let out = tflow(&["--out", dir.path().join("out").to_str().unwrap(), "optimize", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:3:"));

    let unknown = write_config(&dir, "unknown.json", r#"{"t_final": 1.0, "omega0": 1.0, "bogus": 1}"#);
    let out = tflow(&["--out", dir.path().join("out").to_str().unwrap(), "optimize", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

fn strip_timestamp(dir: &Path) -> String {
    fs::read_to_string(dir.join("report.json"))
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn replay_reproduces_outputs() {
    let root = TempDir::new().unwrap();
    let cfg = write_config(&root, "c.json", r#"{"t_final": 1.0, "omega0": 2.5}"#);
    let runs: Vec<Vec<&str>> = vec![
        vec!["--seed", "11", "two-level", "--theta", "0.4", "--t-end", "3", "--points", "300", "--protocol", "5000"],
        vec!["--units", "mhz-cyclic", "hadamard", "--omega0", "10", "--gamma", "5", "--points", "500"],
        vec!["--seed", "3", "optimize", &cfg, "--starts", "3"],
        vec!["sta", "--alpha", "0.5", "--points", "301", "--numeric"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let first = root.path().join(format!("run{i}"));
        let again = root.path().join(format!("replay{i}"));
        let r = run_ok(&first, args);
        let report_path = first.join("report.json");
        run_ok(&again, &["replay", report_path.to_str().unwrap()]);
        for f in r["series_files"].as_array().unwrap() {
            let f = f.as_str().unwrap();
            assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{args:?}: {f}");
        }
        assert_eq!(strip_timestamp(&first), strip_timestamp(&again), "{args:?}");
    }
}

#[test]
fn replay_rejects_unknown_command() {
    let dir = TempDir::new().unwrap();
    let r = run_ok(&dir.path().join("a"), &["sta", "--alpha", "1", "--points", "11"]);
    let mut tampered = r.clone();
    tampered["manifest"]["command"] = "warp".into();
    let path = dir.path().join("tampered.json");
    fs::write(&path, serde_json::to_string(&tampered).unwrap()).unwrap();
    let out = tflow(&["--out", dir.path().join("b").to_str().unwrap(), "replay", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
