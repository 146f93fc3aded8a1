use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counterpdc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/default.toml")
        .display()
        .to_string()
}

#[test]
fn grating_prints_degenerate_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["grating", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value: f64 = text
        .split("Λ = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap();
    assert!((value - 0.35).abs() < 0.02, "{text}");
    let csv = fs::read_to_string(dir.path().join("grating.csv")).unwrap();
    assert!(csv.starts_with("lambda_p_nm, lambda_s_nm, lambda_i_nm, grating_um\n"));
    assert!(dir.path().join("grating.manifest.json").exists());
}

#[test]
fn shipped_config_validates() {
    let o = run(&["validate", "--config", &shipped_config()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("configuration is valid"));
    assert!(stdout(&o).contains("center_nm = 775.0"));
}

#[test]
fn negative_width_exits_one_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "jsa",
        "--set",
        "waveguide.width_um=-4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("width_um"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn zero_grating_names_the_key() {
    let o = run(&["validate", "--set", "grating.period_um=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grating_period"), "{}", stderr(&o));
}

#[test]
fn pump_below_dispersion_range_is_rejected() {
    let o = run(&["validate", "--set", "pump.center_nm=300"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("pump.center_nm") && e.contains("0.35"), "{e}");
}

#[test]
fn unknown_key_and_bad_usage_exit_one() {
    let o = run(&["validate", "--set", "grid.resolution=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("resolution"));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two_without_outputs() {
    // A 4-point grid cannot resolve the marginals.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "jsa",
        "--set",
        "grid.n_signal=4",
        "--set",
        "grid.n_idler=4",
        "--set",
        "command.schmidt.max_modes=4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("jsa failed"));
    assert!(!out.exists());
}

#[test]
fn jsa_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "jsa".to_string(),
            "--set".into(),
            "grid.n_signal=96".into(),
            "--set".into(),
            "grid.n_idler=80".into(),
            "--out".into(),
            d.display().to_string(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = bin().args(args(d)).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["jsa.csv", "jsa_meta.json", "marginal_signal.csv", "marginal_idler.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("jsa.csv")).unwrap();
    assert!(csv.starts_with("omega_s_rad_s, omega_i_rad_s, re, im\n"));
    assert_eq!(csv.lines().count(), 1 + 96 * 80);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("jsa.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "jsa");
    assert_eq!(manifest["config"]["grid"]["n_signal"], 96);
    assert!(manifest["started_unix_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn schmidt_and_angle_in_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&[
        "schmidt", "--set", "grid.n_signal=128", "--set", "grid.n_idler=128", "--format", "json", "--out", d,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("schmidt.json")).unwrap()).unwrap();
    let l0 = v["summary"]["lambda0"].as_f64().unwrap();
    assert!(l0 > 0.0 && l0 <= 1.0);
    assert_eq!(v["lambda_n"].as_array().unwrap().len(), 64);

    let o = run(&["angle", "--out", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("θ = "));
    let csv = fs::read_to_string(dir.path().join("angle.csv")).unwrap();
    assert!(csv.starts_with("lambda_s_nm, lambda_i_nm, theta_deg, eq4_residual"));
}

#[test]
fn degenerate_sweep_has_seventeen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep-degenerate",
        "--set",
        "grid.n_signal=48",
        "--set",
        "grid.n_idler=48",
        "--set",
        "command.optimize_pump.tolerance_nm=0.05",
        "--set",
        "command.optimize_pump.spot_checks=0",
        "--set",
        "command.schmidt.max_modes=32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep_degenerate.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "lambda_p_nm, lambda_s_nm, lambda_i_nm, grating_um, pump_fwhm_opt_nm, lambda0, purity, theta_deg, eq4_residual, status"
    );
    assert_eq!(lines.len(), 18);
    for l in &lines[1..] {
        assert_eq!(l.split(", ").count(), 10);
    }
}

#[test]
fn config_file_is_not_modified() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let text = "[pump]\nfwhm_nm = 0.3\n\n[output]\ndir = \"unused\"\n";
    fs::write(&path, text).unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "grating",
        "--config",
        path.to_str().unwrap(),
        "--set",
        "pump.fwhm_nm=0.2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
}
