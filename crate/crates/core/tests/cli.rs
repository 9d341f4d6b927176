use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvtherm::fitting::detect_dips;
use nvtherm::Spectrum;
use serde_json::Value;

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(format!("{name}.json"))
}

fn nvtherm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvtherm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line on stderr");
    serde_json::from_str(line).expect("error line is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn sweep_column(path: &Path, column: &str) -> Vec<Option<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().ok()).collect()
}

#[test]
fn simulate_fig2_gives_four_dips_then_fit_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nvtherm(&[
        "simulate",
        "--config",
        preset("fig2_dressed").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("simulate: 781 points, 4 dips"));

    let csv = dir.path().join("spectrum.csv");
    let spec = Spectrum::load_csv(&csv).unwrap();
    assert_eq!(spec.span(), (2866.0, 2905.0));
    assert_eq!(detect_dips(&spec, 4).unwrap().len(), 4);
    assert!(detect_dips(&spec, 5).is_err());
    assert_eq!(read_json(&dir.path().join("spectrum.json"))["schema_version"], 1);

    let input = format!("input={}", csv.display());
    let o = nvtherm(&[
        "fit",
        "--config",
        preset("fig2_dressed").to_str().unwrap(),
        "--out",
        out,
        "--set",
        &input,
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("fit: converged"));
    let fit = read_json(&dir.path().join("fit.json"));
    assert_eq!(fit["kind"], "fit_result");
    assert_eq!(fit["schema_version"], 1);
    assert_eq!(fit["converged"], true);
    let rabi_rf = fit["params"][2].as_f64().unwrap();
    assert!((rabi_rf - 4.0).abs() < 0.2, "{rabi_rf}");
}

#[test]
fn sensitivity_with_calibration_reports_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let cal_dir = dir.path().join("cal");
    let hot_dir = dir.path().join("hot");
    let config = preset("fig2_dressed");
    let o = nvtherm(&[
        "sensitivity",
        "--config",
        config.to_str().unwrap(),
        "--out",
        cal_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("eta_slope"));
    let cal = format!("calibration.fit={}", cal_dir.join("fit.json").display());
    let o = nvtherm(&[
        "sensitivity",
        "--config",
        config.to_str().unwrap(),
        "--out",
        hot_dir.to_str().unwrap(),
        "--seed",
        "9",
        "--set",
        "environment.temperature=305",
        "--set",
        &cal,
        "--set",
        "calibration.temperature=300",
    ]);
    assert!(o.status.success(), "{o:?}");
    let report = read_json(&hot_dir.join("sensitivity.json"));
    assert_eq!(report["kind"], "sensitivity");
    let t = &report["temperature"];
    let (temp, sigma) = (t["temperature"].as_f64().unwrap(), t["uncertainty"].as_f64().unwrap());
    assert!((temp - 305.0).abs() < 3.0 * sigma, "{temp} ± {sigma}");
    assert!(report["report"]["eta_slope"].as_f64().unwrap() > 0.0);
    assert!(stdout(&o).contains(" K"));
}

#[test]
fn oracle_check_preset_passes_and_strong_drive_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = preset("oracle_weak_drive");
    let o = nvtherm(&["oracle-check", "--config", config.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{o:?}");
    let report = read_json(&dir.path().join("oracle_check.json"));
    assert!(report["relative_rms"].as_f64().unwrap() < 0.01);
    assert!(report["max_relative_deviation"].as_f64().unwrap() < 0.01);

    let o = nvtherm(&[
        "oracle-check",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out,
        "--set",
        "drive.rabi_mw=3",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn validate_reports_diagnostics() {
    let o = nvtherm(&["validate", "--config", preset("fig2_dressed").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("valid"));

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("fig2_dressed")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replace("\"gamma_b\": 0.5", "\"gamma_b\": -0.5")).unwrap();
    let o = nvtherm(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(
        lines[0].starts_with("damping.gamma_b (line 7): must be > 0"),
        "{}",
        lines[0]
    );
    let err = stderr_json(&o);
    assert_eq!(err["kind"], "config");
    assert_eq!(err["diagnostics"][0]["key"], "damping.gamma_b");

    std::fs::write(&bad, text.replace("\"gamma_d\"", "\"gamma_c\"")).unwrap();
    let o = nvtherm(&["validate", "--config", bad.to_str().unwrap()]);
    let err = stderr_json(&o);
    let suggestion = err["diagnostics"][0]["suggestion"].as_str().unwrap();
    assert!(suggestion == "damping.gamma_b" || suggestion == "damping.gamma_d");
    assert!(stdout(&o).contains("did you mean"));
}

#[test]
fn run_commands_reject_invalid_config_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = nvtherm(&[
        "simulate",
        "--config",
        preset("fig2_dressed").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "strain.nodes=4",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["diagnostics"][0]["key"], "strain.nodes");
    assert!(!out.join("spectrum.csv").exists());
}

#[test]
fn numerical_failures_carry_module_reason() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    let freqs: Vec<f64> = (0..50).map(|i| 2870.0 + i as f64 * 0.2).collect();
    Spectrum::new(freqs, vec![1.0; 50], vec![0.0; 50])
        .unwrap()
        .save_csv(&flat)
        .unwrap();
    let input = format!("input={}", flat.display());
    let o = nvtherm(&[
        "fit",
        "--config",
        preset("fig2_dressed").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--set",
        &input,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "peak_detection");
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = nvtherm(&[
            "simulate",
            "--config",
            preset("fig2_dressed").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        (
            std::fs::read(out.join("spectrum.csv")).unwrap(),
            std::fs::read(out.join("spectrum.json")).unwrap(),
        )
    };
    let a = run("a", "3");
    let b = run("b", "3");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}

#[test]
fn fig5_sweep_narrows_with_rf_rabi() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvtherm(&[
        "sweep",
        "--config",
        preset("fig5_narrowing").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let fwhm: Vec<f64> = sweep_column(&dir.path().join("sweep.csv"), "fwhm_mhz")
        .into_iter()
        .map(Option::unwrap)
        .collect();
    assert_eq!(fwhm.len(), 4);
    assert!(fwhm.windows(2).all(|w| w[1] < w[0]), "{fwhm:?}");
    let json = read_json(&dir.path().join("sweep.json"));
    assert_eq!(json["kind"], "sweep");
    assert_eq!(json["schema_version"], 1);
}

fn interior_minimum(dir: &Path, rows: usize, cols: usize) {
    let eta = sweep_column(&dir.join("sweep.csv"), "eta_slope_k_per_rthz");
    assert_eq!(eta.len(), rows * cols);
    let (best, _) = eta
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let (r, c) = (best / cols, best % cols);
    assert!(
        r > 0 && r + 1 < rows && c > 0 && c + 1 < cols,
        "minimum at ({r}, {c}): {eta:?}"
    );
}

#[test]
fn sensitivity_map_has_interior_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvtherm(&[
        "sweep",
        "--config",
        preset("sensitivity_map").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("0 failed"));
    interior_minimum(dir.path(), 4, 4);
}

#[test]
fn fig4_parallel_has_interior_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvtherm(&[
        "sweep",
        "--config",
        preset("fig4_parallel").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    interior_minimum(dir.path(), 6, 6);
}

#[test]
fn every_shipped_config_validates_and_runs() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&presets)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    assert!(names.len() >= 4);
    for path in names {
        let o = nvtherm(&["validate", "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), stdout(&o));
        let mode = read_json(&path)["mode"].as_str().unwrap().to_string();
        let dir = tempfile::tempdir().unwrap();
        let start = std::time::Instant::now();
        let o = nvtherm(&[
            &mode,
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}: {o:?}", path.display());
        assert_eq!(stdout(&o).lines().count(), 1);
        assert!(start.elapsed().as_secs() < 60);
    }
}

#[test]
fn usage_errors_exit_nonzero() {
    let o = nvtherm(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = nvtherm(&["validate", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["kind"], "io");
}
