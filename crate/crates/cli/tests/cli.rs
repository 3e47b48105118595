use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_smooth-rough"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn compute_examples() {
    let o = run(&["compute", "--fn", "rho", "--u", "2.0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (1.0 - 2f64.ln())).abs() < 1e-14);
    assert!(stdout(&o).starts_with("0.306852819"));

    let o = run(&["compute", "--fn", "psi", "--x", "30", "--y", "5"]);
    assert_eq!(stdout(&o), "18\n");
    let o = run(&["compute", "--fn", "delta", "--x", "7", "--y", "11"]);
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["compute", "--fn", "zeta", "--x", "7", "--y", "11"]).status.code(), Some(2));
    assert_eq!(run(&["compute", "--fn", "psi"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["compute", "--fn", "delta", "--x", "0.5", "--y", "11"]).status.code(), Some(3));
    assert_eq!(run(&["compute", "--fn", "rho", "--u", "80"]).status.code(), Some(3));
    assert_eq!(run(&["compute", "--fn", "psi", "--x", "10", "--y", "1"]).status.code(), Some(3));
    assert_eq!(run(&["table", "--fn", "delta", "--x", "1:10:0lin", "--y", "5"]).status.code(), Some(2));
    assert_eq!(run(&["table", "--fn", "rho,psi", "--u", "1", "--y", "5"]).status.code(), Some(2));
}

#[test]
fn table_csv_is_deterministic() {
    let args = ["table", "--fn", "delta", "--x", "10:10000:7log", "--y", "5,13"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,u,value");
    assert_eq!(lines.len(), 1 + 14);
    // x-major, then y
    assert!(lines[1].starts_with("10,5,") && lines[2].starts_with("10,13,"));
    for l in &lines[1..] {
        let v = l.rsplit(',').next().unwrap();
        let digits = v.trim_start_matches('-').replace('.', "");
        let mantissa = digits.split('e').next().unwrap().trim_start_matches('0');
        assert!(mantissa.len() <= 15, "{v}");
    }

    let o = run(&["table", "--fn", "v,w", "--x", "100,1000", "--y", "7"]);
    assert!(stdout(&o).starts_with("x,y,u,v,w\n"));
}

#[test]
fn verify_factorization() {
    let o = run(&["verify", "--suite", "factorization", "--x-max", "10000", "--y", "2,3,5,7"]);
    assert_eq!(o.status.code(), Some(0));
    let j = json(&o);
    assert_eq!(j["suite"], "factorization");
    assert_eq!(j["pass"], true);
    assert_eq!(j["max_scaled_residual"], 0.0);
    assert_eq!(j["grid"]["y_list"], serde_json::json!([2, 3, 5, 7]));
    assert!(j["metadata"]["timestamp"].is_string());
    for key in ["tol", "worst", "grid"] {
        assert!(j.get(key).is_some(), "{key}");
    }
}

#[test]
fn verify_first_identity_and_reproducibility() {
    let args = [
        "verify", "--suite", "thm1eq1_star", "--x", "10:3000:8log", "--y", "5,13,101", "--tol", "1e-6", "--no-timestamp",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, run(&args).stdout);
    let j = json(&a);
    assert!(j["metadata"].get("timestamp").is_none());
    assert!(j["max_scaled_residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn verify_truncated_identity_states_budget() {
    let o = run(&["verify", "--suite", "thm1eq2", "--x", "10:1000:4log", "--y", "7", "--tol", "1e-4"]);
    assert_eq!(o.status.code(), Some(4));
    let j = json(&o);
    assert_eq!(j["status"], "inconclusive");
    assert!(j["inconclusive_budget"].as_f64().unwrap() > 1e-4);

    let o = run(&[
        "verify", "--suite", "thm1eq2", "--x", "10:1000:4log", "--y", "7", "--tol", "1e-4", "--truncation-x", "1e10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(json(&o).get("inconclusive_budget").is_none());
}

#[test]
fn verify_errors() {
    assert_eq!(run(&["verify", "--suite", "nope", "--x", "10", "--y", "5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "thm1eq1", "--y", "5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "thm1eq1", "--x", "0.5,10", "--y", "5"]).status.code(), Some(3));
    let o = run(&["verify", "--suite", "convolution297"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["grid"]["x_spec"], "0:20:201lin");
}

#[test]
fn audits() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rows.csv");
    let summary = dir.path().join("summary.json");
    let o = run(&[
        "audit",
        "--bound",
        "rh",
        "--y",
        "100000",
        "--x",
        "10:1000000:50log",
        "--output",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s["min_margin"].as_f64().unwrap() >= 0.0);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("x,y,observed,bound,margin,trivial_flag\n"));
    assert_eq!(rows.lines().count(), 51);

    let o = run(&["audit", "--bound", "trivial", "--y", "3", "--x", "1:100:100lin"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 101);

    let o = run(&["audit", "--bound", "corexact2", "--y", "13", "--X", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let s: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(s["propagation"][0]["status"], "verified");

    // an undersized f leaves the conclusions untested
    let o = run(&["audit", "--bound", "corexact2", "--y", "13", "--X", "10000", "--f", "0.1"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["audit", "--bound", "corexact", "--starred", "--y", "7", "--X", "5000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().next().unwrap().ends_with(",quantity"));

    assert_eq!(run(&["audit", "--bound", "rh", "--y", "2", "--x", "10"]).status.code(), Some(3));
    assert_eq!(run(&["audit", "--bound", "riemann", "--y", "5", "--x", "10"]).status.code(), Some(2));
}

#[test]
fn config_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("caps.conf");
    std::fs::write(&cfg, "# small caps\nmax_x = 500\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = run(&["--config", c, "compute", "--fn", "psi", "--x", "1000", "--y", "5"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run_env(
        &["--config", c, "compute", "--fn", "psi", "--x", "1000", "--y", "5"],
        &[("SMOOTH_ROUGH_MAX_X", "2000")],
    );
    assert_eq!(stdout(&o), "86\n");
    let o = run_env(&["compute", "--fn", "psi", "--x", "10", "--y", "5"], &[("SMOOTH_ROUGH_MAX_X", "ten")]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(&["--config", c, "compute", "--fn", "rho", "--u", "1"]).status.code(), Some(2));
}
