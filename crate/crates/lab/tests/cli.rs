use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const TTW: &str = r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"count": 50, "seed": 7}}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn lab(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_superint-lab"));
    cmd.args(args)
        .arg("--config")
        .arg(config)
        .env_remove("SUPERINT_OUT_DIR");
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn verify_passes_with_exit_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ttw.json", TTW);
    let out = tmp.path().join("out");
    let o = lab(&["verify"], &cfg, Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "superint-report/1");
    assert_eq!(r["pass"], true);
    assert_eq!(r["config"]["sampling"]["seed"], 7);
    assert_eq!(r["config"]["sampling"]["margin"], 0.1);
    assert_eq!(r["config"]["fifth"]["tolerance"], 1e-9);
    assert_eq!(r["hash"].as_str().unwrap().len(), 64);
    assert!(r["timings"]["total_s"].is_number());
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"seed": 7}, "colour": 1}"#,
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0, "m": 2}, "sampling": {"seed": 7}}"#,
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"count": 10}}"#,
        r#"{"experiment": "rank", "system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"seed": 7}}"#,
        r#"{"system": {"family": "evans", "variant": "V4", "k": 1.0}, "sampling": {"seed": 7}}"#,
        r#"{"system": {"family": "ttw", "n": 0, "k": 1.0}, "sampling": {"seed": 7}}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), text);
        let o = lab(&["verify"], &cfg, Some(&out));
        assert_eq!(
            o.status.code(),
            Some(2),
            "case {i}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let missing = lab(&["verify"], &tmp.path().join("absent.json"), Some(&out));
    assert_eq!(missing.status.code(), Some(2));
    assert!(!out.join("report.json").exists());
}

#[test]
fn failed_checks_exit_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "eq.json",
        r#"{"system": {"family": "calogero", "k": [1.0, 1.0, 1.0]}, "sampling": {"seed": 7},
            "equivalence": {"wolfes_h": 2.0}}"#,
    );
    let out = tmp.path().join("out");
    let o = lab(&["equivalence"], &cfg, Some(&out));
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(r["checks"][0]["value"].as_f64().unwrap() > 1e-2);
    let csv = fs::read_to_string(out.join("equivalence.csv")).unwrap();
    assert!(csv.starts_with("psi,calogero_shifted,wolfes,deviation\n"));
}

#[test]
fn singular_initial_state_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sim.json",
        r#"{"system": {"family": "calogero", "k": [1.0, 1.0, 1.0]}, "sampling": {"seed": 1},
            "integrator": {"steps": 100, "initial": {"x": [0.0, 0.0, 1.0], "p": [1.0, -1.0, 0.0]}}}"#,
    );
    let o = lab(&["simulate"], &cfg, Some(&tmp.path().join("out")));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("X1"));
}

#[test]
fn near_collision_run_aborts_with_status() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sim.json",
        r#"{"system": {"family": "calogero", "k": [1e-12, 1e-12, 1e-12]}, "sampling": {"seed": 1},
            "integrator": {"steps": 2000, "initial": {"x": [0.0, 0.05, 1.0], "p": [2.0, -2.0, 0.0]}}}"#,
    );
    let out = tmp.path().join("out");
    let o = lab(&["simulate"], &cfg, Some(&out));
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["info"]["simulation"]["status"], "aborted_near_collision");
    assert!(r["info"]["simulation"]["abort"]["step"].as_u64().unwrap() < 2000);
}

fn strip_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn identical_runs_give_identical_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sim.json",
        r#"{"system": {"family": "ttw", "n": 1, "k": 1.0}, "sampling": {"seed": 5},
            "integrator": {"steps": 3000, "csv_stride": 10}}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(lab(&["simulate"], &cfg, Some(&a)).status.code(), Some(0));
    assert_eq!(lab(&["simulate"], &cfg, Some(&b)).status.code(), Some(0));
    assert_eq!(strip_timings(report(&a)), strip_timings(report(&b)));
    assert_eq!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
    let c = tmp.path().join("c");
    assert_eq!(lab(&["simulate", "--seed", "6"], &cfg, Some(&c)).status.code(), Some(0));
    assert_ne!(report(&a)["hash"], report(&c)["hash"]);
    assert_eq!(report(&c)["config"]["sampling"]["seed"], 6);
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let from_config = tmp.path().join("configured");
    let text = TTW.replace(
        r#""sampling""#,
        &format!(
            r#""output": {{"path": {:?}, "format": "csv"}}, "sampling""#,
            from_config.to_str().unwrap()
        ),
    );
    let cfg = write_config(tmp.path(), "ttw.json", &text);
    assert_eq!(lab(&["rank"], &cfg, None).status.code(), Some(0));
    assert!(from_config.join("report.json").exists());
    assert!(fs::read_to_string(from_config.join("checks.csv"))
        .unwrap()
        .starts_with("name,value,"));

    let env_dir = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_superint-lab"))
        .args(["rank", "--config"])
        .arg(&cfg)
        .env("SUPERINT_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("report.json").exists());

    let flag_dir = tmp.path().join("flag");
    let o = Command::new(env!("CARGO_BIN_EXE_superint-lab"))
        .args(["rank", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("SUPERINT_OUT_DIR", env_dir.join("unused"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("report.json").exists());
    assert!(!env_dir.join("unused").exists());
}

#[test]
fn coeffs_prints_the_table() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ttw.json", TTW);
    let out = tmp.path().join("out");
    let o = lab(&["coeffs"], &cfg, Some(&out));
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "sigma,i,l,numerator,denominator");
    assert_eq!(lines.len(), 7);
    assert!(lines.contains(&"1,3,0,-1,1"));
    assert!(lines.contains(&"0,0,1,1,3"));
    assert_eq!(fs::read_to_string(out.join("coefficients.csv")).unwrap(), stdout);
}

#[test]
fn rank_dumps_spectra() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "ttw.json", TTW);
    let out = tmp.path().join("out");
    assert_eq!(lab(&["rank"], &cfg, Some(&out)).status.code(), Some(0));
    let r = report(&out);
    let per_point = r["info"]["rank"]["per_point"].as_array().unwrap();
    assert_eq!(per_point.len(), 20);
    assert_eq!(per_point[0]["singular_values"].as_array().unwrap().len(), 4);
    assert_eq!(r["checks"][1]["name"], "rank with duplicated member");
    assert_eq!(r["checks"][1]["value"], 4.0);
}
