use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toeplitz-spectra"));
    c.env_remove("TOEPLITZ_SPECTRA_CACHE");
    c
}

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, Option<Value>) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = bin()
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    let report = std::fs::read_to_string(out.join(format!("{cmd}.json"))).ok().map(|s| serde_json::from_str(&s).unwrap());
    (status.status.code().unwrap(), report)
}

const NILPOTENT: &str = r#"{
    "partition": {"k": [2, 2], "lambda": 0.0},
    "symbols": [{"group": 1, "profile": {"kind": "quasi_homogeneous", "p": [1, -1]}, "boundary_continuous": true}],
    "dmax": 3,
    "regions": {"resolution": 64}
}"#;

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("assemble", r#"{"partition": {"k": [2], "lambda": 0.0}, "bogus": 1}"#, dir.path(), &[]);
    assert_eq!(code, 1);
    let err: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/assemble.error.json")).unwrap()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn verify_without_symbols_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("verify", r#"{"partition": {"k": [2], "lambda": 0.0}}"#, dir.path(), &[]);
    assert_eq!(code, 1);
}

#[test]
fn lowered_quadrature_order_fails_the_dirichlet_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NILPOTENT.replace("\"dmax\": 3", "\"dmax\": 3, \"quadrature\": {\"gamma_order\": 4}");
    let (code, report) = run("verify", &cfg, dir.path(), &["--no-cache"]);
    assert_eq!(code, 3);
    let checks = report.unwrap()["payload"]["checks"].as_array().unwrap().clone();
    let dirichlet = checks.iter().find(|c| c["name"] == "dirichlet_quadrature").unwrap();
    assert_eq!(dirichlet["passed"], false);
    assert!(dirichlet["residual"].as_f64().unwrap() > 1e-10);
}

#[test]
fn verify_passes_on_the_nilpotent_demo() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("verify", NILPOTENT, dir.path(), &["--threads", "2"]);
    let report = report.unwrap();
    assert_eq!(code, 0, "{}", report["warnings"]);
    assert_eq!(report["payload"]["passed"], true);
}

#[test]
fn trivial_symbols_assemble_to_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "partition": {"k": [1, 2], "lambda": 1.5},
        "quasi_radial": {"kind": "constant", "value": 1.0},
        "symbols": [{"group": 2, "profile": {"kind": "constant", "value": 1.0}}],
        "dmax": 4
    }"#;
    let (code, report) = run("assemble", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let d = report.unwrap()["payload"]["operator"]["distance_to_identity_frobenius"].as_f64().unwrap();
    assert!(d < 1e-12, "{d}");
}

#[test]
fn quasi_homogeneous_pattern_matches_fourier_support() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("assemble", NILPOTENT, dir.path(), &[]);
    assert_eq!(code, 0);
    let report = report.unwrap();
    for d in report["payload"]["groups"][0]["degrees"].as_array().unwrap() {
        assert_eq!(d["support_consistent"], true);
    }
    assert_eq!(report["payload"]["groups"][0]["degrees"][1]["pattern"], serde_json::json!([".x", ".."]));
}

#[test]
fn warm_cache_reproduces_the_payload() {
    let dir = tempfile::tempdir().unwrap();
    let (_, first) = run("assemble", NILPOTENT, dir.path(), &[]);
    let (code, second) = run("assemble", NILPOTENT, dir.path(), &[]);
    assert_eq!(code, 0);
    let (first, second) = (first.unwrap(), second.unwrap());
    assert_eq!(first["payload"], second["payload"]);
    assert_eq!(first["cache"]["cache_hit"], false);
    assert_eq!(second["cache"]["cache_hit"], true);
}

#[test]
fn cache_location_follows_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("elsewhere");
    std::fs::write(dir.path().join("config.json"), NILPOTENT).unwrap();
    let status = bin()
        .env("TOEPLITZ_SPECTRA_CACHE", &cache)
        .args(["assemble", "--config"])
        .arg(dir.path().join("config.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_dir(&cache).unwrap().count() > 0);
    assert!(!dir.path().join("out/cache").exists());
}

#[test]
fn spectrum_of_the_constant_one_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "partition": {"k": [2], "lambda": 0.0},
        "symbols": [{"group": 1, "profile": {"kind": "constant", "value": 1.0}}],
        "dmax": 5
    }"#;
    let (code, report) = run("spectrum", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert_eq!(report.unwrap()["payload"]["distinct"], serde_json::json!([[1.0, 0.0]]));
    let csv = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert!(csv.starts_with("re,im,j,d,multiplicity\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn hull_of_a_circle_valued_symbol_is_a_disk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "partition": {"k": [2], "lambda": 0.0},
        "symbols": [{"group": 1, "profile": {"kind": "expression", "expr": "exp(2*pi*i*s1^2)"}, "boundary_continuous": true}],
        "dmax": 4
    }"#;
    let (code, report) = run("hull", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let p = &report.unwrap()["payload"];
    let area = p["groups"][0]["hull_area"].as_f64().unwrap();
    assert!((area - std::f64::consts::PI).abs() < 0.01 * std::f64::consts::PI, "{area}");
    assert_eq!(p["inverse_closed"], false);
    assert!(dir.path().join("out/hull_g1.svg").exists());
    assert!(dir.path().join("out/hull_g1.json").exists());
}

#[test]
fn nilpotent_demo_is_not_semisimple() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run("semisimple", NILPOTENT, dir.path(), &[]);
    assert_eq!(code, 0);
    let p = &report.unwrap()["payload"];
    assert_eq!(p["semisimple"], false);
    assert_eq!(p["witness"], serde_json::json!({"group": 1, "degree": 1}));
    assert_eq!(p["stable"], true);
}

#[test]
fn radical_report_on_the_nilpotent_demo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NILPOTENT.replace(
        "\"dmax\": 3",
        r#""dmax": 3,
        "division": {"group": 1, "degree": 2, "sum": {"terms": [
            {"gamma": {"kind": "constant", "value": 1.0}, "rho": [2, 0]},
            {"gamma": {"kind": "constant", "value": 0.5}, "rho": [1, 1]}]}}"#,
    );
    let (code, report) = run("radical", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let p = &report.unwrap()["payload"];
    let gen = &p["generator"];
    assert!(gen["max_abs_gelfand"].as_f64().unwrap() < 1e-8);
    assert!(gen["frobenius_norm"].as_f64().unwrap() > 1e-6);
    assert_eq!(gen["power_norms_nonincreasing"], true);
    assert!(p["division"]["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn gelfand_and_berezin_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "partition": {"k": [2], "lambda": 0.0},
        "symbols": [{"group": 1, "profile": {"kind": "expression", "expr": "s1^2"}, "boundary_continuous": true}],
        "dmax": 4,
        "berezin": {"group": 1, "w": [[0.3, 0.0], [0.4, 0.0]], "degrees": [10, 40]}
    }"#;
    let (code, report) = run("gelfand", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let p = &report.unwrap()["payload"];
    assert!(p["surrogate_points"].as_u64().unwrap() > 0);
    let points: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/gelfand_points.json")).unwrap()).unwrap();
    assert!(points[0]["points"][0].get("value").is_some());
    let (code, report) = run("berezin", cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let errors = report.unwrap()["payload"]["errors"].as_array().unwrap().clone();
    assert!(errors[1].as_f64().unwrap() < errors[0].as_f64().unwrap());
}

#[test]
fn info_runs_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().arg("info").arg("--out").arg(dir.path()).status().unwrap();
    assert!(status.success());
    assert!(dir.path().join("info.json").exists());
}

#[test]
fn missing_berezin_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run("berezin", NILPOTENT, dir.path(), &[]);
    assert_eq!(code, 1);
}
