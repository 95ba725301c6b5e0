use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn sdistance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdistance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

/// Compare stdout with a checked-in golden file; `SDISTANCE_BLESS=1` rewrites it.
fn check_golden(name: &str, args: &[&str], expected_code: i32) {
    let out = sdistance(args);
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "{name}: stderr {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = golden_path(name);
    if std::env::var_os("SDISTANCE_BLESS").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
        return;
    }
    let golden = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&golden),
        "{name} drifted from its golden file"
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn golden_reports() {
    let johnson = fixture("johnson_10_3.json");
    let pentagon = fixture("pentagon.json");
    let icosahedron = fixture("icosahedron.json");
    let e8 = fixture("e8.json");
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("ratios_johnson.json", vec!["ratios", path_str(&johnson)]),
        ("ratios_pentagon_all.json", vec!["ratios", path_str(&pentagon), "--all"]),
        ("ratios_icosahedron.json", vec!["ratios", path_str(&icosahedron)]),
        ("ratios_e8.json", vec!["ratios", path_str(&e8)]),
        ("profile_pentagon.json", vec!["profile", path_str(&pentagon)]),
        ("certify_johnson_class1.json", vec!["certify", path_str(&johnson), "--class", "1"]),
        ("invert_6_-8.json", vec!["invert", "-s", "3", "-k", "6,-8"]),
        ("invert_3_-3.json", vec!["invert", "-s", "3", "-k", "3,-3"]),
        ("enumerate_10_3.json", vec!["enumerate", "-d", "10", "-s", "3", "--realize"]),
        ("enumerate_5_2.json", vec!["enumerate", "-d", "5", "-s", "2", "--realize"]),
        ("bounds_euclidean_10_3.json", vec!["bounds", "--setting", "euclidean", "-d", "10", "-s", "3"]),
        ("bounds_even_v2_8_4.json", vec!["bounds", "--setting", "antipodal_even_v2", "-d", "8", "-s", "4"]),
    ];
    for (name, args) in cases {
        check_golden(name, &args, 0);
    }
}

#[test]
fn construct_then_ratios_pipeline() {
    let dir = TempDir::new().unwrap();
    let x = dir.path().join("x.json");
    let out = sdistance(&["construct", "johnson", "-d", "10", "-s", "3", "-o", path_str(&x)]);
    assert!(out.status.success());
    let out = sdistance(&["ratios", path_str(&x)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    let report = &v["reports"][0];
    assert_eq!(report["setting"], "euclidean");
    assert_eq!(report["rounded_k"], serde_json::json!([3, -3, 1]));
    assert_eq!(report["hypothesis_met"], true);
}

#[test]
fn constructed_file_keeps_full_precision() {
    let out = sdistance(&["construct", "pentagon"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.30901699437494745"));
}

#[test]
fn pentagon_is_not_a_violation() {
    let out = sdistance(&["ratios", path_str(&fixture("pentagon.json")), "--setting", "euclidean"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    let r = &v["reports"][0];
    assert_eq!(r["hypothesis_met"], false);
    assert_eq!(r["integrality"], serde_json::json!([false, false]));
    assert!((r["k_values"][0].as_f64().unwrap() - 1.618034).abs() < 1e-6);
}

#[test]
fn corrupted_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dimension\": 2, \"points\": [[0, 0], [1]]}").unwrap();
    assert_eq!(sdistance(&["certify", path_str(&bad), "--class", "1"]).status.code(), Some(2));
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(sdistance(&["ratios", path_str(&bad)]).status.code(), Some(2));
    assert_eq!(sdistance(&["ratios", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(sdistance(&["bounds", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(sdistance(&["nonsense"]).status.code(), Some(2));
    let out = sdistance(&["certify", path_str(&fixture("pentagon.json")), "--class", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invert_exit_codes() {
    // wrong sign pattern is bad input
    assert_eq!(sdistance(&["invert", "-s", "3", "-k", "-1,2"]).status.code(), Some(2));
    assert_eq!(sdistance(&["invert", "-s", "4", "-k", "2,-1"]).status.code(), Some(2));
    // k_1 = 1 is never reached: the solver reports a numerical failure
    assert_eq!(sdistance(&["invert", "-s", "3", "-k", "1,-1"]).status.code(), Some(3));
}

#[test]
fn enumeration_cap_and_determinism() {
    assert_eq!(sdistance(&["enumerate", "-d", "10", "-s", "3", "--cap", "5"]).status.code(), Some(2));
    let a = sdistance(&["enumerate", "-d", "10", "-s", "3", "--realize"]);
    let b = sdistance(&["enumerate", "-d", "10", "-s", "3", "--realize"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json_stdout(&a);
    assert_eq!(v["summary"]["counts"]["total"], 21);
}

#[test]
fn embed_check_rejects_bad_matrices() {
    let out = sdistance(&["embed-check", path_str(&fixture("not_embeddable.json")), "-d", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["embeddable"], false);
    assert!(v["min_eigenvalue"].as_f64().unwrap() < 0.0);
    let out = sdistance(&["embed-check", path_str(&fixture("three_antipodes.json")), "-d", "3"]);
    assert_eq!(json_stdout(&out)["embeddable"], false);
}

#[test]
fn output_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("bounds.json");
    let out = sdistance(&["bounds", "--setting", "euclidean", "-d", "10", "-s", "3", "-o", path_str(&target)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["ratio_bound"], 6);
}

/// Johnson points moved off their distance classes inside their own hyperplane.
fn perturbed_johnson(seed: u64, amplitude: f64) -> String {
    let text = std::fs::read_to_string(fixture("johnson_10_3.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in v["points"].as_array_mut().unwrap() {
        let row = p.as_array_mut().unwrap();
        let noise: Vec<f64> = (0..row.len()).map(|_| rng.gen_range(-amplitude..amplitude)).collect();
        let mean = noise.iter().sum::<f64>() / noise.len() as f64;
        for (c, e) in row.iter_mut().zip(&noise) {
            *c = Value::from(c.as_f64().unwrap() + e - mean);
        }
    }
    v.to_string()
}

#[test]
fn perturbed_set_triggers_violation() {
    let dir = TempDir::new().unwrap();
    let x = dir.path().join("noisy.json");
    std::fs::write(&x, perturbed_johnson(0, 1e-3)).unwrap();
    let out = sdistance(&["ratios", path_str(&x), "--tol", "1e-2"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_stdout(&out);
    assert_eq!(v["reports"][0]["hypothesis_met"], true);
    let out = sdistance(&["certify", path_str(&x), "--tol", "1e-2"]);
    assert_eq!(out.status.code(), Some(1));
    json_stdout(&out);
}
