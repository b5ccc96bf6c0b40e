use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use cqed::correlations::SteadyStateModel;
use cqed::units::mhz;
use cqed::{Drive, SpaceDims, SystemParams};

const FIRST_ATOM: &str = r#"{"g_mhz": 16.38, "delta_c_mhz": 18.0, "drive": "atom", "eta_mhz": 0.55, "n_max": 8}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn write_config(dir: &Path, name: &str, system: &str, task: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!(r#"{{"system": {system}, "task": {task}}}"#)).unwrap();
    path
}

fn run(config: &Path, extra: &[&str]) -> Run {
    let out =
        Command::new(env!("CARGO_BIN_EXE_cqed")).arg("--config").arg(config).args(extra).output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run_json(config: &Path) -> Value {
    let r = run(config, &["--format", "json"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn column(v: &Value, name: &str) -> Vec<f64> {
    let cols = v["columns"].as_array().unwrap();
    let j = cols.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    v["rows"].as_array().unwrap().iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "g2.json",
        FIRST_ATOM,
        r#"{"type": "g2", "taus_ns": {"start": -20, "stop": 20, "step": 2}}"#,
    );
    for format in ["csv", "json"] {
        let a = run(&cfg, &["--format", format]);
        let b = run(&cfg, &["--format", format]);
        assert_eq!(a.code, 0);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn sweep_output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        FIRST_ATOM,
        r#"{"type": "sweep", "axes": [{"parameter": "delta_c_mhz", "values": {"start": 10, "stop": 20, "step": 2}},
                                      {"parameter": "eta_mhz", "values": [0.1, 0.3]}],
            "quantities": ["mean_photons", "g2_zero"]}"#,
    );
    let one = run(&cfg, &["--threads", "1"]);
    let four = run(&cfg, &["--threads", "4"]);
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, four.stdout);
    // first axis slowest
    let rows = csv_rows(&one.stdout);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][0], rows[1][0]);
    assert_ne!(rows[0][1], rows[1][1]);
}

#[test]
fn g2_rows_match_library_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "g2.json", FIRST_ATOM, r#"{"type": "g2", "taus_ns": [0, 5, 10]}"#);
    let r = run(&cfg, &[]);
    assert_eq!(r.code, 0);
    let cli: Vec<f64> = csv_rows(&r.stdout).iter().map(|row| row[1].parse().unwrap()).collect();

    let params = SystemParams::with_cavity_detuning(
        mhz(16.38),
        mhz(2.0),
        mhz(3.0),
        mhz(18.0),
        mhz(0.0),
        Drive::Atom(mhz(0.55)),
        SpaceDims::with_max_photons(8).unwrap(),
    )
    .unwrap();
    let model = SteadyStateModel::solve(&params).unwrap();
    let taus: Vec<f64> = [0.0, 5.0, 10.0].iter().map(|t| t * 1e-9).collect();
    let lib = model.g2(&taus).unwrap().values;
    for (a, b) in cli.iter().zip(&lib) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn atom_drive_spectrum_vanishes_without_coupling() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"g_mhz": 0.0, "drive": "atom", "eta_mhz": 0.1}"#,
        r#"{"type": "spectrum", "detunings_mhz": {"start": -10, "stop": 10, "step": 0.5}}"#,
    );
    let v = run_json(&cfg);
    let n = column(&v, "mean_photons");
    assert_eq!(n.len(), 41);
    assert!(n.iter().all(|x| *x == 0.0));
}

#[test]
fn single_point_sweep_matches_single_run() {
    let dir = TempDir::new().unwrap();
    let sweep = write_config(
        dir.path(),
        "sweep.json",
        FIRST_ATOM,
        r#"{"type": "sweep", "axes": [{"parameter": "eta_mhz", "values": [0.55]}], "quantities": ["mean_photons"]}"#,
    );
    let dist = write_config(dir.path(), "dist.json", FIRST_ATOM, r#"{"type": "distribution"}"#);
    let swept = column(&run_json(&sweep), "mean_photons")[0];
    let single = run_json(&dist)["mean"].as_f64().unwrap();
    assert_eq!(swept.to_bits(), single.to_bits());
}

#[test]
fn detuning_sweep_reproduces_spectrum_task() {
    let dir = TempDir::new().unwrap();
    let system = r#"{"g_mhz": 16.38, "drive": "cavity", "eta_mhz": 0.05}"#;
    let grid = r#"{"start": -25, "stop": 25, "step": 2.5}"#;
    let sweep = write_config(
        dir.path(),
        "sweep.json",
        system,
        &format!(
            r#"{{"type": "sweep", "axes": [{{"parameter": "delta_c_mhz", "values": {grid}}}],
                "quantities": ["semiclassical_mean_photons"]}}"#
        ),
    );
    let spectrum =
        write_config(dir.path(), "s.json", system, &format!(r#"{{"type": "spectrum", "detunings_mhz": {grid}}}"#));
    let a = column(&run_json(&sweep), "semiclassical_mean_photons");
    let b = column(&run_json(&spectrum), "mean_photons");
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn eta_sweep_scales_quadratically() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"g_mhz": 16.38, "delta_c_mhz": 14.0, "drive": "cavity", "n_max": 6}"#,
        r#"{"type": "sweep", "axes": [{"parameter": "eta_mhz", "values": [0.01, 0.02, 0.04, 0.08]}],
            "quantities": ["semiclassical_mean_photons"]}"#,
    );
    let n = column(&run_json(&cfg), "semiclassical_mean_photons");
    for k in 1..n.len() {
        assert!((n[k] / n[0] - 4f64.powi(k as i32)).abs() < 1e-12 * 4f64.powi(k as i32));
    }
}

#[test]
fn failed_sweep_points_carry_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"g_mhz": 16.38, "delta_c_mhz": 18.0, "drive": "atom", "n_max": 6}"#,
        r#"{"type": "sweep", "axes": [{"parameter": "eta_mhz", "values": [0.0, 0.2]}],
            "quantities": ["mean_photons", "g2_zero"]}"#,
    );
    let v = run_json(&cfg);
    assert_eq!(v["failed_points"], 1);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0][1].as_f64(), Some(0.0));
    assert_eq!(rows[0][2], "NaN");
    assert!(rows[0][3].as_str().unwrap().contains("g2_zero"));
    assert!(rows[1][2].as_f64().unwrap() < 1.0);
    assert_eq!(rows[1][3], "");
}

#[test]
fn certify_first_manifold() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", FIRST_ATOM, r#"{"type": "certify", "n": 1}"#);
    let v = run_json(&cfg);
    let report = &v["report"];
    assert_eq!(report["inequality_pass"], true);
    assert!(report["g_np1"].as_f64().unwrap() < 1.0);
    assert_eq!(v["provenance"]["engine"], "cqed");
    assert_eq!(v["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn json_spectrum_feeds_the_fitter() {
    let dir = TempDir::new().unwrap();
    let truth = r#"{"g_mhz": 16.38, "delta_ac_mhz": 1.5, "drive": "cavity", "eta_mhz": 0.05}"#;
    let spectrum = write_config(
        dir.path(),
        "s.json",
        truth,
        r#"{"type": "spectrum", "detunings_mhz": {"start": -30, "stop": 30, "step": 0.5},
            "temperature_scale_mhz": 1.2, "a_ec": 0.0002}"#,
    );
    let r = run(&spectrum, &["--format", "json", "--out", dir.path().join("data.json").to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());

    let fit = write_config(
        dir.path(),
        "fit.json",
        r#"{"g_mhz": 17.2, "delta_ac_mhz": 1.0, "drive": "cavity", "eta_mhz": 0.06}"#,
        r#"{"type": "fit-spectrum", "input": "data.json", "temperature_scale_mhz": 0.9, "a_ec": 0.0003}"#,
    );
    let v = run_json(&fit);
    assert_eq!(v["converged"], true);
    let values = column(&v, "value");
    let expected = [16.38, 1.5, 0.05, 1.2, 0.0002];
    for (got, want) in values.iter().zip(expected) {
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"g_mhz": 16.38, "colour": 1}"#, r#"{"type": "distribution"}"#);
    let r = run(&cfg, &[]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.is_empty());
    let err: Value = serde_json::from_str(r.stderr.trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");

    let neg = write_config(dir.path(), "neg.json", r#"{"g_mhz": -1.0}"#, r#"{"type": "distribution"}"#);
    assert_eq!(run(&neg, &[]).code, 2);
    assert_eq!(run(&dir.path().join("missing.json"), &[]).code, 2);
}

#[test]
fn numerical_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "undriven.json",
        r#"{"g_mhz": 16.38, "n_max": 4}"#,
        r#"{"type": "g2", "taus_ns": [0]}"#,
    );
    let r = run(&cfg, &[]);
    assert_eq!(r.code, 3);
    let err: Value = serde_json::from_str(r.stderr.trim()).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "d.json", FIRST_ATOM, r#"{"type": "distribution"}"#);
    let target = dir.path().join("no/such/dir/out.csv");
    let r = run(&cfg, &["--out", target.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    let err: Value = serde_json::from_str(r.stderr.trim()).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}
