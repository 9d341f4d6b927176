use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nvtherm_ffi::*;

fn fig2() -> (NvEnvironment, NvDrive, NvDamping) {
    let mut env = nv_environment_default();
    env.d0 = 2880.0;
    env.ex = 5.0;
    let mut drive = nv_drive_default();
    drive.rabi_mw = 0.6;
    drive.rabi_mw_y = 0.6;
    drive.omega_rf = 10.5;
    drive.rabi_rf = 4.0;
    (
        env,
        drive,
        NvDamping {
            gamma_b: 0.5,
            gamma_d: 0.3,
        },
    )
}

fn last_error() -> String {
    let p = nv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn noisy_spectrum(seed: u64) -> *mut NvSpectrum {
    let (env, drive, damping) = fig2();
    let mut clean = ptr::null_mut();
    let mut noisy = ptr::null_mut();
    unsafe {
        assert_eq!(
            nv_spectrum_simulate(&env, &drive, &damping, 0.05, 0.0, 1, 2866.0, 2905.0, 781, &mut clean),
            NvStatus::Ok
        );
        assert_eq!(nv_spectrum_add_noise(clean, 1e6, 1.0, seed, &mut noisy), NvStatus::Ok);
        nv_spectrum_free(clean);
    }
    noisy
}

#[test]
fn dressed_resonances_through_abi() {
    let mut out = [0.0; 4];
    let s = unsafe { nv_dressed_resonances(2880.0, 5.0, 10.0, 2.0, out.as_mut_ptr()) };
    assert_eq!(s, NvStatus::Ok);
    assert_eq!(out, nvtherm::spin::dressed_resonances(2880.0, 5.0, 10.0, 2.0));
    assert_eq!(
        unsafe { nv_dressed_resonances(2880.0, 5.0, 10.0, 2.0, ptr::null_mut()) },
        NvStatus::NullPointer
    );
    assert!(last_error().contains("out"));
}

#[test]
fn invalid_parameters_map_to_status_codes() {
    let (env, drive, _) = fig2();
    let bad = NvDamping {
        gamma_b: -1.0,
        gamma_d: 0.1,
    };
    let mut v = 0.0;
    let s = unsafe { nv_depletion(&env, &drive, &bad, 2885.0, &mut v) };
    assert_eq!(s, NvStatus::InvalidParameter);
    assert!(last_error().contains("gamma_b"));

    let mut spec = ptr::null_mut();
    let f = [1.0, 1.0];
    let s = unsafe { nv_spectrum_new(f.as_ptr(), f.as_ptr(), ptr::null(), 2, &mut spec) };
    assert_eq!(s, NvStatus::InvalidParameter);
    assert!(spec.is_null());
}

#[test]
fn spectrum_round_trip_and_copy() {
    let spec = noisy_spectrum(1);
    let n = unsafe { nv_spectrum_len(spec) };
    assert_eq!(n, 781);
    let (mut f, mut s, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    unsafe {
        assert_eq!(
            nv_spectrum_copy(spec, f.as_mut_ptr(), s.as_mut_ptr(), w.as_mut_ptr(), n),
            NvStatus::Ok
        );
        assert_eq!(
            nv_spectrum_copy(spec, f.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1),
            NvStatus::InvalidArgument
        );
    }
    assert_eq!((f[0], f[n - 1]), (2866.0, 2905.0));
    assert!(w.iter().all(|&x| x > 0.0));

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.csv").to_str().unwrap()).unwrap();
    let mut loaded = ptr::null_mut();
    unsafe {
        assert_eq!(nv_spectrum_save_csv(spec, path.as_ptr()), NvStatus::Ok);
        assert_eq!(nv_spectrum_load_csv(path.as_ptr(), &mut loaded), NvStatus::Ok);
        let mut s2 = vec![0.0; n];
        assert_eq!(
            nv_spectrum_copy(loaded, ptr::null_mut(), s2.as_mut_ptr(), ptr::null_mut(), n),
            NvStatus::Ok
        );
        assert_eq!(s, s2);
        nv_spectrum_free(loaded);
        nv_spectrum_free(spec);
    }
    let missing = CString::new("/nonexistent/x.csv").unwrap();
    assert_eq!(
        unsafe { nv_spectrum_load_csv(missing.as_ptr(), &mut loaded) },
        NvStatus::Io
    );
}

#[test]
fn fit_sensitivity_and_temperature() {
    let model = CString::new(r#"{"kind":"dressed_dip","omega_rf":10.5}"#).unwrap();
    let spec = noisy_spectrum(3);
    let mut fit = ptr::null_mut();
    unsafe {
        assert_eq!(nv_fit_json_model(spec, model.as_ptr(), 1, &mut fit), NvStatus::Ok);
        assert!(nv_fit_result_converged(fit));
        let n = nv_fit_result_param_count(fit);
        assert_eq!(n, 10);
        let (mut v, mut sig) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            nv_fit_result_params(fit, v.as_mut_ptr(), sig.as_mut_ptr(), n),
            NvStatus::Ok
        );
        let name = CString::new("rabi_rf").unwrap();
        let (mut x, mut sx) = (0.0, 0.0);
        assert_eq!(nv_fit_result_param(fit, name.as_ptr(), &mut x, &mut sx), NvStatus::Ok);
        assert_eq!((x, sx), (v[2], sig[2]));
        assert!((x - 4.0).abs() < 3.0 * sx + 1e-3);

        let budget = NvBudget {
            photon_rate: 1e6,
            alpha: 0.05,
        };
        let mut report = std::mem::zeroed::<NvSensitivity>();
        assert_eq!(nv_slope_sensitivity(fit, &budget, -0.0742, &mut report), NvStatus::Ok);
        assert!(report.eta_slope > 0.0 && report.eta_linewidth > 0.0);
        let mut eta = 0.0;
        assert_eq!(
            nv_linewidth_sensitivity(report.fwhm, report.contrast, &budget, -0.0742, &mut eta),
            NvStatus::Ok
        );
        assert!((eta / report.eta_linewidth - 1.0).abs() < 1e-12);

        let json = nv_fit_result_to_json(fit);
        assert!(!json.is_null());
        let mut back = ptr::null_mut();
        assert_eq!(nv_fit_result_from_json(json, &mut back), NvStatus::Ok);
        nv_string_free(json);
        let mut t = std::mem::zeroed::<NvTemperature>();
        assert_eq!(nv_estimate_temperature(fit, back, 300.0, -0.0742, &mut t), NvStatus::Ok);
        assert_eq!(t.delta_t, 0.0);

        let mut lor = ptr::null_mut();
        assert_eq!(nv_fit_lorentzian(spec, 4, 1, &mut lor), NvStatus::Ok);
        assert_eq!(
            nv_estimate_temperature(lor, fit, 300.0, -0.0742, &mut t),
            NvStatus::ModelMismatch
        );

        let bad = CString::new(r#"{"kind":"dressed_dip","omega":1}"#).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(nv_fit_json_model(spec, bad.as_ptr(), 1, &mut none), NvStatus::Format);

        nv_fit_result_free(lor);
        nv_fit_result_free(back);
        nv_fit_result_free(fit);
        nv_spectrum_free(spec);
    }
}

#[test]
fn oracle_matches_closed_form_in_weak_drive() {
    let (env, mut drive, damping) = fig2();
    drive.rabi_mw = 0.01;
    drive.rabi_mw_y = 0.01;
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            nv_spectrum_simulate(&env, &drive, &damping, 0.05, 0.0, 1, 2866.0, 2905.0, 400, &mut a),
            NvStatus::Ok
        );
        assert_eq!(
            nv_spectrum_oracle(&env, &drive, &damping, 0.05, 2866.0, 2905.0, 400, &mut b),
            NvStatus::Ok
        );
        let (mut sa, mut sb) = (vec![0.0; 400], vec![0.0; 400]);
        nv_spectrum_copy(a, ptr::null_mut(), sa.as_mut_ptr(), ptr::null_mut(), 400);
        nv_spectrum_copy(b, ptr::null_mut(), sb.as_mut_ptr(), ptr::null_mut(), 400);
        let num: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = sb.iter().map(|y| (1.0 - y).powi(2)).sum();
        assert!((num / den).sqrt() < 0.01);
        nv_spectrum_free(a);
        nv_spectrum_free(b);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        nv_spectrum_free(ptr::null_mut());
        nv_fit_result_free(ptr::null_mut());
        nv_string_free(ptr::null_mut());
        assert_eq!(nv_spectrum_len(ptr::null()), 0);
        assert!(!nv_fit_result_converged(ptr::null()));
    }
    let v = unsafe { CStr::from_ptr(nv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn generated_header_compiles_and_links_from_c() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/nvtherm.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "nv_spectrum_simulate",
        "nv_fit_json_model",
        "nv_last_error_message",
        "NV_STATUS_OK",
        "typedef struct NvSpectrum NvSpectrum",
    ] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; header check skipped");
        return;
    }
    let lib = target_dir().join("libnvtherm_ffi.a");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let mut cmd = Command::new(&cc);
    cmd.args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"));
    if !lib.exists() {
        let o = cmd.arg("-fsyntax-only").output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        eprintln!("static library not built; syntax check only");
        return;
    }
    let o = cmd
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
