use std::process::Command;

use chiral_switch::cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("chiral-switch").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn value(csv: &str, key: &str) -> f64 {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no {key} in {csv}"))
        .parse()
        .unwrap()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let (code, _, err) = run(&[]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["sweep", "fig9"]).0, 1);
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sweep"));
}

#[test]
fn switch_reports_baseline_point() {
    let (code, out, _) = run(&["switch"]);
    assert_eq!(code, 0);
    assert!((value(&out, "omega0") - 0.099).abs() < 1e-3);
    assert!((value(&out, "phi0_deg") - 181.17).abs() < 0.01);
    assert!(value(&out, "residual") <= 1e-10);
}

#[test]
fn switch_json_parses() {
    let (code, out, _) = run(&["switch", "--silenced", "left", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["silenced"], "left");
}

#[test]
fn ee_recovers_mixture() {
    let (code, out, _) = run(&["ee", "--n-left", "75", "--n-right", "25"]);
    assert_eq!(code, 0);
    assert!((value(&out, "ee_estimate") - 0.5).abs() < 1e-8);
}

#[test]
fn robust_large_decoherence() {
    let (code, out, _) = run(&["robust", "--config", "large", "--axis", "amplitude"]);
    assert_eq!(code, 0);
    assert!((value(&out, "domega_rel_c") - 0.01).abs() < 1e-3);
    assert!(!out.contains("dphi_c_deg"));
}

#[test]
fn missing_config_exits_one() {
    let (code, _, err) = run(&["switch", "--config", "/nonexistent/file.toml"]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[decoherence]\ngamma12 = -1.0\n").unwrap();
    assert_eq!(run(&["switch", "--config", path.to_str().unwrap()]).0, 1);
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dark.toml");
    std::fs::write(
        &path,
        "[decoherence]\ngamma12 = 0.0\ngamma13 = 0.0\ngamma23 = 0.0\n\
         dephasing21 = 0.0\ndephasing31 = 0.0\ndephasing32 = 0.0\n",
    )
    .unwrap();
    let (code, _, err) = run(&["steady", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn steady_overrides() {
    let (code, out, _) = run(&["steady", "--omega21", "0.0990011299804", "--phi", "181.170305745"]);
    assert_eq!(code, 0);
    assert!(value(&out, "right.rho21_abs") < 1e-9);
    assert!(value(&out, "left.rho21_abs") > 0.1);
}

#[test]
fn sweep_writes_file_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["sweep", "fig1cd", "--grid", "8", "--out", p, "--quiet"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# chiral-switch"));
    assert!(text.contains("# omega0 = "));
    assert!(text.contains("[drives]"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "phi_deg,abs_rho21_L,abs_rho21_R");
    assert_eq!(rows.len(), 9);
}

#[test]
fn fig1ab_window_on_the_switch_point() {
    // A one-point grid placed on the switch: one enantiomer is dark.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("window.toml");
    std::fs::write(
        &path,
        "[sweep]\nomega_min = 0.0990011299804\nomega_max = 0.0990011299804\nomega_points = 1\n\
         phi_min_deg = 181.170305745\nphi_span_deg = 1.0\nphi_points = 1\n",
    )
    .unwrap();
    let (code, out, _) = run(&["sweep", "fig1ab", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let row: Vec<f64> = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!(row[2] > -3.0, "{row:?}");
    assert!(row[3] < -6.0, "{row:?}");
}

#[test]
fn sweep_json_format() {
    let (code, out, _) = run(&["sweep", "fig2cd", "--config", "large", "--grid", "5", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["columns"][2], "eta_amplitude");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_chiral-switch");
    assert_eq!(Command::new(bin).output().unwrap().status.code(), Some(1));
    assert_eq!(
        Command::new(bin).args(["switch", "--quiet"]).output().unwrap().status.code(),
        Some(0)
    );
    let bad_threads = Command::new(bin)
        .args(["sweep", "fig1cd", "--grid", "4"])
        .env("CHIRAL_SWITCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
}
