use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mothersolve(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mothersolve"))
        .args(args)
        .current_dir(dir)
        .env_remove("MOTHERSOLVE_THREADS")
        .output()
        .expect("spawn mothersolve")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    rd.records().map(|r| r.unwrap().iter().map(|f| f.parse().unwrap()).collect()).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(name: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let validator = jsonschema::validator_for(&json(&path)).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn dec(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

#[test]
fn solve_writes_curve_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [\"1\"]\n");
    let out = mothersolve(&["solve", "--config", &cfg, "--out", "a"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let base = tmp.path().join("a/solve/w_1");
    let curve = json(&base.join("curve.json"));
    assert_schema("curve", &curve);
    assert_eq!(curve["phase"], "PreCritical");
    assert!((dec(&curve["c0"]) - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    assert!((dec(&curve["ell0"]) + 0.1467953308).abs() < 1e-8);
    assert!((dec(&curve["mass"]) - 1.0).abs() < 1e-8);
    assert_eq!(curve["windings"], serde_json::json!([1, 1, 0]));
    for (name, count) in curve["files"].as_object().unwrap() {
        assert_eq!(csv_rows(&base.join(name)).len() as u64, count.as_u64().unwrap(), "{name}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [0.5, 2]\n");
    for o in ["a", "b"] {
        assert!(mothersolve(&["solve", "--config", &cfg, "--out", o], tmp.path()).status.success());
    }
    for w in ["w_0.5", "w_2"] {
        for f in ["boundary.csv", "gamma0.csv", "gamma1.csv", "gamma2.csv", "mu0_density.csv", "curve.json"] {
            let a = fs::read(tmp.path().join("a/solve").join(w).join(f)).unwrap();
            let b = fs::read(tmp.path().join("b/solve").join(w).join(f)).unwrap();
            assert!(a == b, "{w}/{f} differs");
        }
    }
}

#[test]
fn post_critical_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [0.2]\n");
    let out = mothersolve(&["solve", "--config", &cfg, "--out", "a"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("post-critical"));
    assert!(!tmp.path().join("a").exists());
}

#[test]
fn usage_errors_exit_64() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(mothersolve(&["solve", "--n-list", ""], tmp.path()).status.code(), Some(64));
    assert_eq!(mothersolve(&["solve", "--n-list", "10,x"], tmp.path()).status.code(), Some(64));
    assert_eq!(mothersolve(&["frobnicate"], tmp.path()).status.code(), Some(64));
    let cfg = write_config(tmp.path(), "w = [1]\nunknown = 3\n");
    assert_eq!(mothersolve(&["solve", "--config", &cfg], tmp.path()).status.code(), Some(64));
    assert_eq!(mothersolve(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mothersolve"))
        .args(["solve", "--out", "a"])
        .current_dir(tmp.path())
        .env("MOTHERSOLVE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn figures_follow_sample_counts_and_end_at_branch_points() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [2]\nn_list = [8, 12]\n[samples]\nboundary = 64\ntrajectory = 50\n");
    let out = mothersolve(&["figures", "--config", &cfg, "--out", "a"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let base = tmp.path().join("a/figures/w_2");
    assert_eq!(csv_rows(&base.join("droplet.csv")).len(), 64);
    for f in ["gamma0", "gamma1", "gamma2", "left", "right", "contour", "loop_inner", "loop_outer"] {
        assert_eq!(csv_rows(&base.join(format!("{f}.csv"))).len(), 50, "{f}");
    }
    assert_eq!(csv_rows(&base.join("zeros_N8.csv")).len(), 8);
    assert_eq!(csv_rows(&base.join("zeros_N12.csv")).len(), 12);

    let curve = json(&base.join("curve.json"));
    assert_schema("curve", &curve);
    let z1 = (dec(&curve["z1"]["re"]), dec(&curve["z1"]["im"]));
    let z2 = (dec(&curve["z2"]["re"]), dec(&curve["z2"]["im"]));
    let g0 = csv_rows(&base.join("gamma0.csv"));
    let (a, b) = (&g0[0], &g0[g0.len() - 1]);
    let d = |r: &Vec<f64>, z: (f64, f64)| (r[1] - z.0).hypot(r[2] - z.1);
    assert!(d(a, z1).min(d(a, z2)) < 1e-7);
    assert!(d(b, z1).min(d(b, z2)) < 1e-7);
    assert!(d(a, z1).max(d(b, z1)) > 1e-3);
}

#[test]
fn poly_reports_all_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [1]\nn_list = [6, 9]\nr0 = [0, 1]\n");
    let out = mothersolve(&["poly", "--config", &cfg, "--out", "a", "--seed", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let base = tmp.path().join("a/poly/w_1");
    for nn in [6, 9] {
        for r0 in [0, 1] {
            let doc = json(&base.join(format!("N{nn}_r{r0}.json")));
            assert_schema("poly", &doc);
            let n = nn + r0;
            assert_eq!(doc["zero_count"], n);
            assert_eq!(doc["polynomial"]["coefficients"].as_array().unwrap().len(), n as usize + 1);
            assert_eq!(csv_rows(&base.join(format!("zeros_N{nn}_r{r0}.csv"))).len(), n as usize);
        }
    }
    let field = csv_rows(&base.join("field_errors.csv"));
    assert!(!field.is_empty());
    assert!(field.iter().all(|r| r[4].is_finite() && r[4] >= 0.0));
}

#[test]
fn verify_catches_perturbed_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "w = [1]\n[verify]\nonly = [3]\nrho_factor = 1.01\n");
    let out = mothersolve(&["verify", "--config", &bad, "--out", "bad"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
    let report = json(&tmp.path().join("bad/verify/report.json"));
    assert_schema("report", &report);
    assert_eq!(report["all_pass"], false);
    assert_eq!(report["failures"], serde_json::json!([3]));

    let good = write_config(tmp.path(), "w = [1]\n[verify]\nonly = [3]\n");
    let out = mothersolve(&["verify", "--config", &good, "--out", "good"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&tmp.path().join("good/verify/report.json"));
    assert_schema("report", &report);
    assert_eq!(report["all_pass"], true);
}

#[test]
fn schemas_reject_float_numerics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [1]\n");
    assert!(mothersolve(&["solve", "--config", &cfg, "--out", "a"], tmp.path()).status.success());
    let mut curve = json(&tmp.path().join("a/solve/w_1/curve.json"));
    curve["rho"] = serde_json::json!(0.9);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/curve.schema.json");
    assert!(!jsonschema::validator_for(&json(&path)).unwrap().is_valid(&curve));
}

#[test]
fn seeded_poly_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w = [2]\nn_list = [5, 7]\nr0 = [0]\n");
    for o in ["a", "b"] {
        assert!(mothersolve(&["poly", "--config", &cfg, "--out", o, "--seed", "11"], tmp.path()).status.success());
    }
    for f in ["N5_r0.json", "N7_r0.json", "zeros_N7_r0.csv", "field_errors.csv"] {
        let a = fs::read(tmp.path().join("a/poly/w_2").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b/poly/w_2").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}
