use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wavelab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavelab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("WAVELAB_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const W0: &str = r#"{"nonlinearity": "mbbm", "params": {"a": 0.0, "E": -0.05, "c": 2.0, "branch_hint": 1.0}}"#;

#[test]
fn solve_writes_conserved_quantities_and_residuals() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    let out = wavelab(tmp.path(), &["solve", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = read_json(&tmp.path().join("solve.json"));
    for key in ["T", "M", "P", "K", "ta_me", "tc_pe", "T_a", "M_E"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["T"].as_f64().unwrap() - 8.300542091082).abs() < 1e-8);
    assert!(v["ta_me"].as_f64().unwrap() < 1e-6);
}

#[test]
fn energy_below_the_well_is_a_domain_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    let out = wavelab(tmp.path(), &["solve", "--config", &cfg, "-E", "-0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(err["error"], "NoOrbit");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"parms": {}}"#);
    let out = wavelab(tmp.path(), &["indices", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_csv_has_header_and_requested_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    let out = wavelab(tmp.path(), &["solve", "--config", &cfg, "--format", "csv", "--profile-points", "40"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("profile.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,u,ux");
    assert_eq!(lines.len(), 41);
    let u: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(u.is_finite());
}

#[test]
fn indices_flags_on_cnoidal_and_dnoidal_waves() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    let out = wavelab(tmp.path(), &["indices", "--config", &cfg, "-E", "0.02", "--hint", "0"]);
    assert!(out.status.success());
    let v = read_json(&tmp.path().join("indices.json"));
    assert_eq!(v["orientation_unstable"], true);
    assert!(v["delta"].as_f64().unwrap() < 0.0);

    let out = wavelab(tmp.path(), &["indices", "--config", &cfg, "-E", "-0.01"]);
    assert!(out.status.success());
    let v = read_json(&tmp.path().join("indices.json"));
    assert_eq!(v["orbital_stable_sufficient"], true);
    assert_eq!(v["modulational"], "stable_triple_axis");
}

#[test]
fn spectrum_of_a_stable_wave_stays_on_the_axis_and_empty_scan_keeps_header() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"nonlinearity": "mbbm", "params": {"a": 0.0, "E": -0.05, "c": 2.0, "branch_hint": 1.0},
        "kappa_points": 4, "scan": {"re_min": 3.0, "re_max": 4.0, "im_min": 3.0, "im_max": 4.0, "n_re": 3, "n_im": 3}}"#;
    let cfg = write_config(tmp.path(), body);
    let out = wavelab(tmp.path(), &["spectrum", "--config", &cfg, "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let scan = std::fs::read_to_string(tmp.path().join("scan.csv")).unwrap();
    assert_eq!(scan, "kappa,re_mu,im_mu,residual\n");
    for j in 0..3 {
        let text = std::fs::read_to_string(tmp.path().join(format!("branch_{j}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("kappa,re_mu,im_mu,residual"));
        for line in lines {
            let re: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(re.abs() < 1e-7, "branch {j}: Re mu = {re}");
        }
    }
}

#[test]
fn single_point_sweep_matches_indices() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    assert!(wavelab(tmp.path(), &["indices", "--config", &cfg]).status.success());
    assert!(wavelab(tmp.path(), &["sweep", "--config", &cfg]).status.success());
    let single = read_json(&tmp.path().join("indices.json"));
    let rows = read_json(&tmp.path().join("sweep.json"));
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["status"], "ok");
    for (k, v) in single.as_object().unwrap() {
        assert_eq!(&row[k], v, "field {k}");
    }
}

#[test]
fn sweep_across_the_separatrix_marks_rows_and_completes() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"nonlinearity": "mbbm", "params": {"a": 0.0, "E": -0.05, "c": 2.0, "branch_hint": 1.0},
        "sweep": {"E": [-0.1, -0.3, 0.0, 0.05]}}"#;
    let cfg = write_config(tmp.path(), body);
    let out = wavelab(tmp.path(), &["sweep", "--config", &cfg, "--jobs", "2"]);
    assert!(out.status.success());
    let rows = read_json(&tmp.path().join("sweep.json"));
    let status: Vec<&str> = rows.as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap()).collect();
    assert_eq!(status[0], "ok");
    assert_eq!(status[1], "NoOrbit");
    assert_ne!(status[2], "ok");
    assert_eq!(status[3], "ok");
}

#[test]
fn pf_rows_and_solitary_summary() {
    let tmp = TempDir::new().unwrap();
    let body = r#"{"pf": {"E": [0.1], "c": [2.0]}, "solitary": {"p": 2, "c": 2, "E": [-0.3, -0.1, -0.03]}}"#;
    let cfg = write_config(tmp.path(), body);
    let out = wavelab(tmp.path(), &["pf", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = read_json(&tmp.path().join("pf.json"));
    let row = &rows.as_array().unwrap()[0];
    assert!((row["I_0"].as_f64().unwrap() - 58.585975163).abs() < 1e-6);
    let sol = read_json(&tmp.path().join("solitary.json"));
    assert_eq!(sol["predicted"], "stable");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), W0);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(wavelab(dir, &["indices", "--config", &cfg, "--format", "csv"]).status.success());
    }
    let read = |d: &Path| std::fs::read(d.join("indices.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
