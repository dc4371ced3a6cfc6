use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_fracorder");

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn ml_exponential_shortcut() {
    let o = run(&["ml", "--rho", "1.0", "--z", "-1"], "");
    assert_eq!(code(&o), 0);
    assert!((json(&o)["value"].as_f64().unwrap() - (-1f64).exp()).abs() < 1e-15);
}

#[test]
fn ml_matches_oracle() {
    let o = run(
        &["ml", "--rho", "0.5", "--lambda", "9.8696", "--sigma", "1", "--t", "20"],
        "",
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let x = 9.8696 * 20f64.sqrt();
    let r = fracorder::oracle::ml_reference(0.5, -x, &Default::default()).unwrap();
    assert!((v["value"].as_f64().unwrap() - r).abs() < 1e-10);
    for key in ["p_term", "q_term", "route", "abs_err_est"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn ml_rejects_rho_outside_unit_interval() {
    for rho in ["1.5", "1.0", "0"] {
        let o = run(&["ml", "--rho", rho, "--sigma", "1", "--lambda", "2", "--t", "1"], "");
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("rho must be in (0,1)"));
    }
    assert_eq!(code(&run(&["ml", "--rho", "0.5", "--bogus", "1"], "")), 2);
}

#[test]
fn forward_single_mode_heat() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "heat.json",
        r#"{"model": {"type": "interval", "length": 1.0, "modes": 1}, "initial": {"preset": "mode1"},
            "frac": {"rho": 1.0, "sigma": 1.0}, "times": [0.01, 0.1, 0.5]}"#,
    );
    let o = run(&["forward", c.to_str().unwrap()], "");
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,observation,tail_bound"));
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[1] - (-std::f64::consts::PI.powi(2) * f[0]).exp()).abs() < 1e-15);
    }
}

#[test]
fn forward_tail_column_nonincreasing() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "ten.json",
        r#"{"model": {"type": "interval", "length": 1.0, "modes": 10}, "initial": {"preset": "decay_1_over_k"},
            "frac": {"rho": 0.6, "sigma": 1.0}, "times": [0.001, 0.01, 0.1, 1.0, 10.0], "tol": 0.01}"#,
    );
    let o = run(&["--config", c.to_str().unwrap(), "forward"], "");
    assert_eq!(code(&o), 0);
    let tails: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(tails.len(), 5);
    assert!(tails.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn forward_field_output_and_out_flag() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "rect.json",
        r#"{"model": {"type": "rectangle", "lx": 1.0, "ly": 2.0, "modes": 6}, "initial": {"coefficients": [1, 0.5]},
            "frac": {"rho": 0.5, "sigma": 1.0}, "times": [0.1], "points": [[0.5, 1.0], [0.0, 1.0]]}"#,
    );
    let out = dir.path().join("field.csv");
    let o = run(&["forward", c.to_str().unwrap(), "--out", out.to_str().unwrap()], "");
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,t,u");
    assert!(lines[1].starts_with("0.5 1.0,0.1,"));
    assert_eq!(lines[2], "0.0 1.0,0.1,0.0");
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = config(dir.path(), "bad.json", "{\"model\": ");
    assert_eq!(code(&run(&["forward", bad.to_str().unwrap()], "")), 3);
    let unknown = config(
        dir.path(),
        "unknown.json",
        r#"{"model": {"type": "interval", "length": 1.0, "modes": 1}, "initial": {"preset": "mode1"},
            "frac": {"rho": 0.5, "sigma": 1.0}, "times": [1.0], "colour": "blue"}"#,
    );
    assert_eq!(code(&run(&["forward", unknown.to_str().unwrap()], "")), 3);
    assert_eq!(code(&run(&["forward", "/nonexistent/config.json"], "")), 3);
}

#[test]
fn forward_tolerance_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "long.json",
        r#"{"model": {"type": "custom", "eigenvalues": [1.5, 2.0]}, "initial": {"coefficients": [1, 1, 1, 1]},
            "frac": {"rho": 0.5, "sigma": 1.0}, "times": [0.001], "tol": 1e-12}"#,
    );
    assert_eq!(code(&run(&["forward", c.to_str().unwrap()], "")), 4);
}

#[test]
fn observe_warns_when_phi1_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "zero.json",
        r#"{"model": {"type": "interval", "length": 1.0, "modes": 3}, "initial": {"coefficients": [0, 1, 1]},
            "frac": {"rho": 0.5, "sigma": 1.0}, "times": [1.0]}"#,
    );
    let o = run(&["observe", "--t0", "1", c.to_str().unwrap()], "");
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(json(&o)["d0"].as_f64(), Some(0.0));
}

#[test]
fn observe_switches_mode_for_unit_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "unit.json",
        r#"{"model": {"type": "custom", "eigenvalues": [1.0, 3.0]}, "initial": {"coefficients": [1, 2]},
            "frac": {"rho": 0.5, "sigma": 1.0}, "times": [1.0]}"#,
    );
    let o = run(&["observe", "--t0", "100", "--t1", "10", c.to_str().unwrap()], "");
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["lambda_obs"].as_f64(), Some(3.0));
    assert_eq!(v["phi1_abs"].as_f64(), Some(2.0));
}

#[test]
fn observe_invert_first_problem() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "one.json",
        r#"{"model": {"type": "interval", "length": 1.0, "modes": 4}, "initial": {"preset": "decay_1_over_k"},
            "frac": {"rho": 0.6, "sigma": 1.0}, "times": [1.0]}"#,
    );
    let obs = run(&["observe", "--t0", "40", c.to_str().unwrap()], "");
    let file = dir.path().join("obs.json");
    std::fs::write(&file, &obs.stdout).unwrap();
    let o = run(&["invert", file.to_str().unwrap(), "--sigma", "1"], "");
    assert_eq!(code(&o), 0);
    assert!((json(&o)["rho"].as_f64().unwrap() - 0.6).abs() < 1e-8);
}

#[test]
fn invert_exit_codes() {
    let too_big = r#"{"t0": 40.0, "d0": 2.0, "phi1_abs": 1.0, "lambda_obs": 9.8696044010893586}"#;
    let o = run(&["invert", "--sigma", "1"], too_big);
    assert_eq!(code(&o), 5);
    assert_eq!(json(&o)["ok0"].as_bool(), Some(false));

    let equal =
        r#"{"t0": 100.0, "d0": 0.01, "t1": 100.0, "d1": 0.01, "phi1_abs": 1.0, "lambda_obs": 9.8696044010893586}"#;
    let o = run(&["invert", "--sigma-box", "0.25,2.5"], equal);
    assert_eq!(code(&o), 5);
    assert_eq!(json(&o)["spacing_ok"].as_bool(), Some(false));

    assert_eq!(code(&run(&["invert", "--sigma", "1"], "{\"t0\": 40")), 3);
    assert_eq!(
        code(&run(
            &["invert", "--sigma", "1"],
            r#"{"t0": 40, "d0": 0.1, "phi1_abs": 1, "lambda_obs": 2, "x": 1}"#
        )),
        3
    );
    assert_eq!(code(&run(&["invert"], too_big)), 2);
    assert_eq!(
        code(&run(&["invert", "--sigma", "1", "--sigma-box", "0.5,2"], too_big)),
        2
    );
}

#[test]
fn check_reports_admissibility() {
    let ok = r#"{"t0": 40.0, "d0": 0.001, "phi1_abs": 1.0, "lambda_obs": 9.8696044010893586}"#;
    let o = run(&["check", "--sigma", "1"], ok);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["ok0"].as_bool(), Some(true));
    let bad = ok.replace("0.001", "0.9");
    assert_eq!(code(&run(&["check", "--sigma", "1"], &bad)), 5);
}

#[test]
fn invert_restarts_are_reported_and_deterministic() {
    let lambda = std::f64::consts::PI.powi(2);
    let e = |t: f64| {
        fracorder::specfun::ml_neg(0.45, lambda.powf(1.1) * t.powf(0.45))
            .unwrap()
            .value
    };
    let obs = format!(
        r#"{{"t0": 10000.0, "d0": {:e}, "t1": 100.0, "d1": {:e}, "phi1_abs": 1.0, "lambda_obs": {lambda:e}}}"#,
        e(1e4),
        e(1e2)
    );
    let args = ["--seed", "11", "invert", "--sigma-box", "0.25,2.5", "--restarts", "3"];
    let a = run(&args, &obs);
    let b = run(&args, &obs);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["restarts"].as_array().unwrap().len(), 3);
    assert!((v["sigma"].as_f64().unwrap() - 1.1).abs() < 1e-8);
}

#[test]
fn selftest_quick_and_fault_injection() {
    let o = run(&["selftest", "quick"], "");
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.contains("PASS")));
    let f = run(&["selftest", "quick", "--inject-fault", "gamma-table"], "");
    assert_eq!(code(&f), 1);
    assert!(stdout(&f)
        .lines()
        .any(|l| l.starts_with("gamma ") && l.contains("FAIL")));
}

#[test]
fn threads_flag() {
    let o = run(&["--threads", "2", "ml", "--rho", "0.3", "--z", "-2"], "");
    assert_eq!(code(&o), 0);
}
