//! Command-line behaviour: documented examples, exit codes, report schema.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kk"))
        .args(args)
        .env_remove("KK_THREADS")
        .output()
        .expect("kk runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let o = kk(&full);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

fn column(report: &Value, name: &str) -> Vec<Value> {
    let idx = report["columns"]
        .as_array()
        .unwrap()
        .iter()
        .position(|c| c == name)
        .unwrap();
    report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[idx].clone())
        .collect()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn moments_examples() {
    let r = json(&[
        "moments",
        "--family",
        "bergman-beta",
        "--n",
        "2",
        "--s",
        "0",
        "--kmax",
        "3",
    ]);
    let q = column(&r, "q_k");
    assert_eq!(q.len(), 4);
    assert!((q[0].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!((q[2].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);

    let r = json(&[
        "moments",
        "--family",
        "tabulated",
        "--values",
        "1,1,1",
        "--kmax",
        "2",
    ]);
    assert_eq!(column(&r, "q_k"), vec![Value::from(1.0); 3]);

    let r = json(&[
        "moments",
        "--family",
        "power-exp",
        "--c",
        "1",
        "--m",
        "1",
        "--n",
        "2",
        "--s",
        "1",
        "--kmax",
        "0",
        "--check-quadrature",
    ]);
    assert!((column(&r, "q_k")[0].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let diff = column(&r, "quadrature_q_k")[0].as_f64().unwrap() - 1.0;
    assert!(diff.abs() <= 1e-10);
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn kernel_examples() {
    let r = json(&[
        "kernel",
        "--family",
        "phi-radial",
        "--phi",
        "jacobi",
        "--n",
        "2",
        "--m",
        "0",
        "--t",
        "0.5,0",
        "--compare-closed",
    ]);
    let series = column(&r, "series_re");
    assert!((series[0].as_f64().unwrap() - 20.0).abs() <= 1e-10 * 20.0);
    assert!(column(&r, "rel_err")[0].as_f64().unwrap() <= 1e-10);
    // t = 0 gives N(0)/q_0 = 1/1
    assert_eq!(series[1].as_f64().unwrap(), 1.0);

    let r = json(&[
        "kernel",
        "--family",
        "bergman-beta",
        "--n",
        "3",
        "--s",
        "1",
        "--points",
        "9",
        "--compare-closed",
    ]);
    let worst = column(&r, "rel_err")
        .iter()
        .map(|v| v.as_f64().unwrap())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");

    let r = json(&[
        "kernel",
        "--family",
        "power-exp",
        "--n",
        "2",
        "--c",
        "1",
        "--m",
        "1",
        "--s",
        "2",
        "--t",
        "0.3+0.4i,-1",
        "--compare-closed",
    ]);
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn tyz_and_schatten_examples() {
    let r = json(&["tyz", "--n", "3", "--m", "1"]);
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["checks"][0]["name"], "fitted_b1");

    let r = json(&["schatten", "--n", "2", "--p", "3,5", "--L", "100000"]);
    assert_eq!(
        column(&r, "verdict"),
        vec![Value::from("D"), Value::from("C")]
    );
    let r = json(&["schatten", "--n", "3", "--p", "6,7,100", "--L", "100000"]);
    assert_eq!(
        column(&r, "verdict"),
        vec![Value::from("D"), Value::from("C"), Value::from("C")]
    );
}

#[test]
fn verify_geometry_and_mb() {
    let o = kk(&[
        "verify",
        "--suite",
        "geometry",
        "--samples",
        "100000",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("orthogonality_n3_k3_l3"));
    assert!(!text.contains("FAIL"));
    let r = json(&["verify", "--suite", "mb"]);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "assembly_vs_exponential_closed_n3"));
}

#[test]
fn exit_codes() {
    assert_eq!(kk(&["moments", "--bogus"]).status.code(), Some(2));
    assert_eq!(kk(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(
        kk(&["moments", "--family", "bergman-beta", "--s", "-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        kk(&[
            "kernel",
            "--family",
            "tabulated",
            "--values",
            "1,1",
            "--t",
            "0.1",
            "--compare-closed"
        ])
        .status
        .code(),
        Some(2)
    );
    // outside the disc of convergence
    assert_eq!(
        kk(&["kernel", "--family", "bergman-beta", "--t", "1.5"])
            .status
            .code(),
        Some(3)
    );
    // a check that cannot pass: fitted b_1 from two tiny s values
    assert_eq!(
        kk(&["tyz", "--n", "3", "--m", "1", "--s-grid", "1,2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(kk(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_file_and_threads() {
    let dir = std::env::temp_dir().join(format!("kk-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("out.csv");
    let args = [
        "kernel",
        "--family",
        "bergman-beta",
        "--n",
        "2",
        "--points",
        "50",
        "--compare-closed",
    ];
    let mut with_file = args.to_vec();
    with_file.extend(["--threads", "4", "--output", path.to_str().unwrap()]);
    let o = kk(&with_file);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let single = kk(&args);
    assert_eq!(std::fs::read(&path).unwrap(), single.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_kk"))
        .args(args)
        .env("KK_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(env.stdout, single.stdout);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn json_reports_match_the_schema() {
    let validator = schema();
    let runs: [&[&str]; 5] = [
        &[
            "moments",
            "--family",
            "phi-radial",
            "--phi",
            "exponential",
            "--n",
            "3",
            "--kmax",
            "5",
            "--check-quadrature",
        ],
        &[
            "kernel",
            "--family",
            "bergman-beta",
            "--points",
            "3",
            "--compare-closed",
        ],
        &["tyz", "--n", "2", "--m", "0.5"],
        &["schatten", "--n", "2", "--p", "4,100", "--L", "1000"],
        &["verify", "--suite", "tyz"],
    ];
    for args in runs {
        let report = json(args);
        let errors: Vec<String> = validator
            .iter_errors(&report)
            .map(|e| e.to_string())
            .collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
    }
    let bad = serde_json::json!({"command": "kernel", "params": {}, "columns": [], "rows": [], "checks": [], "pass": true});
    assert!(!validator.is_valid(&bad));
}
