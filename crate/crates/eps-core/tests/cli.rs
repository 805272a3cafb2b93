//! Black-box tests of the `eps` binary: argument parsing, exit codes,
//! stdout/stderr contracts, artifact layout, and run-to-run determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn eps() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eps"))
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, json).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn state_writes_the_four_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("artifacts");
    let out = eps().arg("state").arg("--output-dir").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in ["chi.csv", "chi.meta.json", "psi.csv", "phi.csv"] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
        assert!(stdout(&out).contains(name), "stdout does not mention {name}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = eps().arg("state").arg("--output-dir").arg(dir).output().unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        let out = eps()
            .args(["verify", "--suite", "hj"])
            .arg("--output-dir")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    for name in ["chi.csv", "chi.meta.json", "psi.csv", "phi.csv", "verify.json"] {
        let left = fs::read(a.join(name)).unwrap();
        let right = fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn verify_passes_and_the_wrong_sign_control_fails() {
    let tmp = TempDir::new().unwrap();
    let out = eps()
        .args(["verify", "--suite", "hj", "--strict"])
        .arg("--output-dir")
        .arg(tmp.path().join("ok"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["all_pass"], serde_json::Value::Bool(true));

    let out = eps()
        .args(["verify", "--suite", "hj", "--debug-wrong-sign"])
        .arg("--output-dir")
        .arg(tmp.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "negative control must exit 1");
    let text = stdout(&out);
    assert!(text.contains("deliberate defect"), "{text}");
}

#[test]
fn malformed_config_exits_two_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("never-created");

    let config = write_config(tmp.path(), r#"{"grid": {"half_width": -2.0}}"#);
    let out = eps()
        .arg("state")
        .arg("--config")
        .arg(&config)
        .arg("--output-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
    let diag: serde_json::Value =
        serde_json::from_str(stderr(&out).lines().next().unwrap()).unwrap();
    assert_eq!(diag["error"], "Config");
    assert!(diag["message"].as_str().unwrap().contains("half_width"));
    assert!(!out_dir.exists(), "failed run must not leave partial artifacts");

    let config = write_config(tmp.path(), "{nope");
    let out = eps().arg("state").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn worker_cap_environment_variable_is_validated() {
    let out = eps()
        .args(["algebra", "bch", "--wigner-harmonic"])
        .env("EPS_THREADS", "zonk")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let diag: serde_json::Value =
        serde_json::from_str(stderr(&out).lines().next().unwrap()).unwrap();
    assert_eq!(diag["error"], "Config");

    let out = eps()
        .args(["algebra", "bch", "--wigner-harmonic"])
        .env("EPS_THREADS", "4")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn algebra_output_is_pinned() {
    let out = eps()
        .args(["algebra", "extend", "p^2/(2*m) + (k/2)*q^2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).trim(),
        "(1/(2*m))*pi_q^2 + (1/m)*p*pi_q - (k/2)*pi_p^2 - k*q*pi_p"
    );

    let out = eps().args(["algebra", "bch", "--wigner-harmonic"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("(i*hbar/(2*m*f) - i*f*k/(2*hbar))*pi_Q*pi_P"), "{text}");
    assert!(text.contains("terminated_at = 2"), "{text}");

    let out = eps()
        .args(["algebra", "specialize", "--f", "q-function"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("cross_term = absent"), "{text}");
    assert!(text.contains("(1/m)*P*pi_Q - m*omega^2*Q*pi_P"), "{text}");

    let out = eps().args(["algebra", "commutator", "pi_q", "q"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "- i*hbar");
}

#[test]
fn transform_reports_the_cross_path_discrepancy() {
    let tmp = TempDir::new().unwrap();
    let out = eps()
        .args(["transform", "--kind", "qfunction", "--path", "diffop"])
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("cross_path_discrepancy = "), "{text}");
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("cross_path_discrepancy = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(value < 1e-6, "routes disagree by {value:e}");
    assert!(tmp.path().join("qfunction.report.json").is_file());
}

#[test]
fn evolve_needs_a_plan_and_then_writes_the_trajectory() {
    let tmp = TempDir::new().unwrap();
    let out = eps().arg("evolve").arg("--output-dir").arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "evolve without a plan must be a config error");

    let tau = std::f64::consts::TAU;
    let config = write_config(
        tmp.path(),
        &format!(
            r#"{{
              "state": {{"kind": "coherent", "q0": 1.0, "p0": 0.0}},
              "evolution": {{"t_final": {tau}, "dt": {}, "method": "eigenbasis", "record_stride": 10}}
            }}"#,
            tau / 100.0
        ),
    );
    let out = eps()
        .arg("evolve")
        .arg("--config")
        .arg(&config)
        .arg("--output-dir")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time,H_re,H_im,norm_re,norm_im,p_re,p_im,q_re,q_im"
    );
    let last = lines.last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((fields[0] - tau).abs() < 1e-12, "final time {}", fields[0]);
    let q_re = fields[7];
    assert!((q_re - 1.0).abs() < 1e-6, "orbit did not close: <q> = {q_re}");
}
