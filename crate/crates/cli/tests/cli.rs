use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spectra() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spectra"));
    c.env_remove("SPECTRA_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    spectra().args(args).output().expect("spawn spectra")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const INTERVAL: &str = r#"{"domain": {"kind": "interval", "a": 0, "b": "pi"},
    "coefficients": {"preset": "laplacian"}, "resolution": 256, "k": 11, "checks": "all"}"#;

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn presets_listing_and_schema() {
    let o = run(&["presets"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["laplacian", "drifted_linear", "gaussian_soliton", "scalar_T", "const_T"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    let o = run(&["presets", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["preset"].as_str().unwrap()).collect();
    assert_eq!(names, ["laplacian", "drifted_linear", "gaussian_soliton", "scalar_T", "const_T"]);
    assert_eq!(v[1]["parameters"][0]["name"], "c");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["presets", "--bogus"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    let o = spectra().arg("presets").env("SPECTRA_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("SPECTRA_THREADS"));
}

#[test]
fn bad_preset_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &INTERVAL.replace("laplacian", "harmonic"));
    let o = run(&["solve", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(
        e.contains("harmonic") && e.contains("laplacian, drifted_linear, gaussian_soliton, scalar_T, const_T"),
        "{e}"
    );
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("absent.json");
    assert_eq!(code(&run(&["solve", missing.to_str().unwrap()])), 1);
    let cfg = write_config(dir.path(), "c.json", INTERVAL);
    let bad_check = run(&["check", cfg.to_str().unwrap(), "-o", out, "--checks", "quadratic,nonsense"]);
    assert_eq!(code(&bad_check), 1);
    assert!(stderr(&bad_check).contains("yang_upper"));
    assert_eq!(code(&run(&["check", cfg.to_str().unwrap(), "-o", out, "-k", "1"])), 1);
    assert_eq!(code(&run(&["converge", cfg.to_str().unwrap(), "-o", out, "--resolution", "32,64"])), 1);
    assert_eq!(code(&run(&["converge", cfg.to_str().unwrap(), "-o", out, "--resolution", "64,32,128"])), 1);
    let bad_domain = write_config(dir.path(), "d.json", &INTERVAL.replace("\"a\": 0", "\"a\": 5"));
    assert_eq!(code(&run(&["solve", bad_domain.to_str().unwrap(), "-o", out])), 1);
}

#[test]
fn solve_writes_eigenvalues_and_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", INTERVAL);
    let out = dir.path().join("out");
    let o = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "-k",
        "10",
        "--export-matrices",
        "--export-mesh",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,lambda,residual,converged");
    assert_eq!(lines.len(), 11);
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["command"], "solve");
    for key in ["epsilon", "delta", "T0", "eta0", "H0", "C0", "method"] {
        assert!(report["constants"].get(key).is_some(), "{key}");
    }
    assert_eq!(report["spectrum"]["eigenvalues"].as_array().unwrap().len(), 10);
    for f in ["stiffness.mtx", "mass.mtx", "mesh.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let mtx = std::fs::read_to_string(out.join("mass.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
}

#[test]
fn gaussian_annulus_constants_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"domain": {"kind": "annulus", "r_inner": "sqrt(8)", "r_outer": 4},
            "coefficients": {"preset": "gaussian_soliton"}, "resolution": 8, "k": 4}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["solve", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = &read_json(&out.join("report.json"))["constants"];
    assert!(c["C0"].as_f64().unwrap().abs() <= 1e-12, "{c}");
    assert!((c["eta0"].as_f64().unwrap() - 2.0).abs() <= 1e-12, "{c}");
}

#[test]
fn check_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", INTERVAL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["check", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["eigenvalues.csv", "bounds.csv", "convergence.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let bounds = std::fs::read_to_string(a.join("bounds.csv")).unwrap();
    assert!(bounds.starts_with("id,k,lhs,rhs,slack,tightness,pass,status\n"));
    assert!(bounds.lines().any(|l| l.starts_with("quadratic,10,")));
    let report = read_json(&a.join("report.json"));
    assert_eq!(report["summary"]["fail"], 0);
    assert_eq!(report["summary"]["error"], 0);
    assert!(report["tol_rel"].as_f64().unwrap() >= 1e-9);
    assert_eq!(report["injected"].as_array().unwrap().len(), 0);
}

#[test]
fn square_check_handles_degenerate_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "check",
        "--domain",
        r#"{"kind": "rectangle", "ax": 0, "bx": "pi", "ay": 0, "by": "pi"}"#,
        "--coefficients",
        "laplacian",
        "--resolution",
        "32",
        "-k",
        "11",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let clusters = &read_json(&out.join("report.json"))["spectrum"]["clusters"];
    assert!(clusters.as_array().unwrap().iter().any(|g| g.as_array().unwrap().len() == 2), "{clusters}");
}

#[test]
fn injected_lambda_fails_quadratic_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", INTERVAL);
    let out = dir.path().join("out");
    let o = run(&["check", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--inject-lambda", "2=*10"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("quadratic,1,"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["injected"][0]["index"], 2);
    let failed = report["reports"].as_array().unwrap().iter().any(|r| r["id"] == "quadratic" && r["status"] == "fail");
    assert!(failed);
    // the solver output itself is not altered
    let csv = std::fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    let lambda2: f64 = csv.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((lambda2 - 4.0).abs() < 1e-3);
    assert_eq!(
        code(&run(&["check", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--inject-lambda", "12=1"])),
        1
    );
}

#[test]
fn converge_reports_order_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", INTERVAL);
    let out = dir.path().join("out");
    let o =
        run(&["converge", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--resolution", "64,128,256", "-k", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,resolution,h,lambda,extrapolated,observed_order,reliable");
    assert_eq!(lines.len(), 1 + 3 * 3);
    let first: Vec<&str> = lines[1].split(',').collect();
    let order: f64 = first[5].parse().unwrap();
    assert!((1.8..=2.2).contains(&order), "{order}");
    assert_eq!(first[6], "true");
    let report = read_json(&out.join("report.json"));
    assert!(report["bounds_tolerance"].as_f64().unwrap() >= 1e-9);
}

#[test]
fn iteration_cap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"domain": {"kind": "interval", "a": 0, "b": "pi"}, "coefficients": {"preset": "laplacian"},
            "resolution": 256, "k": 4, "tol": 1e-15, "max_iter": 1, "preconditioner": "jacobi"}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["solve", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",false")));
}
