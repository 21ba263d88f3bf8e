use std::path::PathBuf;
use std::process::Command;

use g2kernels::cli::exit_code;
use g2kernels::Error;
use serde_json::Value;

struct Run {
    code: i32,
    json: Option<Value>,
    stderr: String,
}

fn g2k(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_g2k")).args(args).output().expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    Run {
        code: out.status.code().unwrap(),
        json: serde_json::from_str(stdout.trim()).ok(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Value {
    let r = g2k(args);
    assert_eq!(r.code, 0, "{args:?}: {}", r.stderr);
    r.json.expect("JSON on stdout")
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("g2k-{}-{name}", std::process::id()))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn eval_at_the_origin() {
    let v = ok(&["eval", "--kernel", "bergman:l=2", "--u", "0,0", "--v", "0,0"]);
    assert_eq!(f(&v["value_re"]), 1.0);
    assert_eq!(f(&v["value_im"]), 0.0);
    let v = ok(&["eval", "--kernel", "bergman:l=1", "--u", "0,0", "--v", "0,0"]);
    assert_eq!(f(&v["value_re"]), 0.5);
}

#[test]
fn eval_matches_the_lambda_one_product() {
    // u = s(0.5, 0), v = s(-0.2i, 0): 1 / (2 (1 - 0.5 * 0.2i))
    let v = ok(&["eval", "--kernel", "bergman:l=1", "--u", "0.5,0", "--v", "0,0,0,0", "--fd-step", "1e-4"]);
    assert!((f(&v["value_re"]) - 0.5).abs() < 1e-15);
    let v = ok(&["eval", "--kernel", "bergman:l=1", "--u", "0.5,0,0,0", "--v", "0,-0.2,0,0"]);
    let expect = num_complex::Complex64::new(1.0, -0.1).inv() * 0.5;
    assert!((f(&v["value_re"]) - expect.re).abs() < 1e-14);
    assert!((f(&v["value_im"]) - expect.im).abs() < 1e-14);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["eval", "--kernel", "bergman:l=1", "--u", "3,0", "--v", "0,0"],
        vec!["eval", "--kernel", "nonsense", "--u", "0,0", "--v", "0,0"],
        vec!["eval", "--kernel", "bergman:l=-1", "--u", "0,0", "--v", "0,0"],
        vec!["eval", "--kernel", "power:symC:l=2,nu=0.5", "--u", "0,0", "--v", "0,0"],
        vec!["eval", "--kernel", "bergman:l=1", "--u", "0,0", "--v", "0,0", "--fd-step", "1"],
        vec!["curvature", "--kernel", "matcurv:l=2,base=1", "--u", "0,0"],
        vec!["curvature", "--kernel", "symC:l=2", "--u", "0.1,0", "--method", "paper"],
        vec!["psd", "--kernel", "bergman:l=1", "--grid", "4", "--random", "3"],
        vec!["classify", "--a", "w:l=2,nu=-1", "--b", "w:l=2,nu=1"],
        vec!["no-such-command"],
    ] {
        let r = g2k(&args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.stderr);
        assert!(r.json.is_none());
        assert!(!r.stderr.is_empty());
    }
}

#[test]
fn error_kinds_map_to_exit_codes() {
    assert_eq!(exit_code(&Error::Parse("x".into())), 2);
    assert_eq!(exit_code(&Error::NotScalar), 2);
    assert_eq!(exit_code(&Error::NonConvergence(10)), 3);
    assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
    assert_eq!(exit_code(&Error::SingularJacobian("x".into())), 3);
}

#[test]
fn curvature_is_hermitian_and_positive() {
    let v = ok(&["curvature", "--kernel", "bergman:l=2", "--u", "0.5,0.06", "--method", "oracle"]);
    let e = &v["entries"];
    assert!((f(&e[0][1][0]) - f(&e[1][0][0])).abs() < 1e-9);
    assert!((f(&e[0][1][1]) + f(&e[1][0][1])).abs() < 1e-9);
    let det = f(&v["det"]);
    assert!(det > 0.0);
    assert!((det - f(&v["det_closed"])).abs() < 1e-5 * det);
    assert_eq!(v["det_method"], "oracle");
}

#[test]
fn psd_writes_csv_and_reads_point_files() {
    let pts = scratch("points.csv");
    std::fs::write(&pts, "# u1 re, u1 im, u2 re, u2 im\n0,0,0,0\n0.5,0,0.06,0\n-0.2,0.1,0.01,0.02\n0.3,-0.3,0,0.05\n").unwrap();
    let out = scratch("psd.csv");
    let v = ok(&["psd", "--kernel", "bergman:l=1", "--points", pts.to_str().unwrap(), "--csv", out.to_str().unwrap()]);
    assert_eq!(v["verdict"], "psd");
    assert_eq!(v["n"], 4);
    assert_eq!(v["scheme"], "file");
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,min_eig,max_eig,verdict"));
    assert!(lines.next().unwrap().starts_with("4,"));
    std::fs::remove_file(pts).ok();
    std::fs::remove_file(out).ok();
}

#[test]
fn psd_random_and_grid_samples() {
    let v = ok(&["psd", "--kernel", "matcurv:l=2,base=1", "--random", "6", "--seed", "3"]);
    assert_eq!(v["n"], 12);
    assert_eq!(v["seed"], 3);
    let v = ok(&["psd", "--kernel", "detcurv:l=2,nu=1", "--grid", "8", "--tol", "1e-8"]);
    assert_eq!(v["verdict"], "psd");
}

#[test]
fn homogeneity_verdicts() {
    let v = ok(&["homogeneity", "--kernel", "bergman:l=2", "--random", "10"]);
    assert_eq!(f(&v["kappa"]), 1.5);
    assert!(f(&v["quasi_invariance"]["max_relative_residual"]) < 1e-9);
    let r = g2k(&["homogeneity", "--kernel", "bergman:l=2", "--exponent", "1.0", "--random", "10"]);
    assert_eq!(r.code, 1);
    assert!(f(&r.json.unwrap()["quasi_invariance"]["max_relative_residual"]) > 1e-3);
    let v = ok(&["homogeneity", "--kernel", "detcurv:l=1,nu=0", "--random", "5"]);
    assert_eq!(f(&v["jacobian_power"]), 1.0);
}

#[test]
fn fundamental_decomposition() {
    let v = ok(&["fundamental", "--u", "0.5,0.06"]);
    // roots 0.3 and 0.2: r = 0.1 / (1 - 0.06)
    assert!((f(&v["r"]) - 0.1 / 0.94).abs() < 1e-15);
    assert_eq!(f(&v["theta"]), 0.0);
    let v = ok(&["fundamental", "--u", "0.4,0"]);
    assert_eq!(f(&v["r"]), 0.4);
    assert_eq!(v["g"]["alpha"][0], 0.0);
}

#[test]
fn invariants_and_classification() {
    let v = ok(&["invariants", "--module", "det:l=1,nu=0"]);
    assert_eq!(f(&v["published_diagonal_exponent"]), 24.0);
    assert!((f(&v["numeric_diagonal_exponent"]) - 22.0).abs() < 0.05);
    let v = ok(&["classify", "--a", "w:l=2,nu=1", "--b", "w:l=2,nu=1"]);
    assert_eq!(v["verdict"], "equivalent");
    assert!(v["witness"].is_null());
    let r = g2k(&["classify", "--a", "w:l=2,nu=1", "--b", "w:l=3,nu=1"]);
    assert_eq!(r.code, 1);
    let v = r.json.unwrap();
    assert_eq!(v["verdict"], "inequivalent");
    assert!(v["witness"].as_str().unwrap().contains("3 vs 4"));
    let r = g2k(&["classify", "--a", "det:l=1,nu=0", "--b", "w:l=1,nu=1"]);
    assert_eq!(r.code, 1);
    assert!(r.json.unwrap()["witness"].as_str().unwrap().starts_with("cross-family"));
}

#[test]
fn ke_reports_without_failing() {
    let v = ok(&["ke", "--lambda", "1", "--random", "4"]);
    assert_eq!(v["verdict"], "not_einstein");
}

#[test]
fn wallach_and_audit_tables() {
    let v = ok(&["wallach", "--lambda", "1", "--nu", "0.5,1,2", "--grid", "6"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert!(v["note"].as_str().unwrap().contains("consistent"));
    let out = scratch("audit.csv");
    let v = ok(&["audit", "--lambda", "1", "--r-grid", "0,0.5", "--csv", out.to_str().unwrap()]);
    let row = v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["formula"] == "det_curv_on_lambda" && r["r"].as_f64() == Some(0.0))
        .unwrap();
    assert_eq!(f(&row["paper"]), 1.0);
    assert_eq!(f(&row["oracle"]), 2.0);
    assert!(std::fs::read_to_string(&out).unwrap().contains("det_curv_on_lambda"));
    std::fs::remove_file(out).ok();
}
