//! C ABI for `nvtherm`.
//!
//! Every fallible function returns an [`NvStatus`]; on failure the message is
//! available from [`nv_last_error_message`] on the same thread. Spectra and fit
//! results are opaque handles released with their `_free` functions. Strings
//! returned by the library are released with [`nv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nvtherm::fitting::{self, FitModel, FitOptions, FitResult};
use nvtherm::lineshape::{self, Damping, StrainDistribution};
use nvtherm::oracle::{self, OracleRates};
use nvtherm::sensitivity::{self, NoiseBudget};
use nvtherm::spectrum::linear_grid;
use nvtherm::{DriveConfig, Error, PhysicalEnvironment, Spectrum};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameter = 3,
    TaylorRegime = 4,
    DegenerateSteadyState = 5,
    NotPositive = 6,
    PeakDetection = 7,
    SingularFit = 8,
    NoSensitivity = 9,
    ModelMismatch = 10,
    Config = 11,
    Format = 12,
    Io = 13,
    Panic = 14,
}

impl From<&Error> for NvStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => NvStatus::InvalidParameter,
            Error::TaylorRegime => NvStatus::TaylorRegime,
            Error::DegenerateSteadyState { .. } => NvStatus::DegenerateSteadyState,
            Error::NotPositive { .. } => NvStatus::NotPositive,
            Error::PeakDetection { .. } => NvStatus::PeakDetection,
            Error::SingularFit { .. } => NvStatus::SingularFit,
            Error::NoSensitivity => NvStatus::NoSensitivity,
            Error::ModelMismatch(_) => NvStatus::ModelMismatch,
            Error::Config { .. } | Error::UnknownAxis(_) => NvStatus::Config,
            Error::Format(_) | Error::Json(_) | Error::Csv(_) => NvStatus::Format,
            Error::Io(_) => NvStatus::Io,
        }
    }
}

/// Opaque spectrum handle.
pub struct NvSpectrum(Spectrum);

/// Opaque fit result handle.
pub struct NvFitResult(FitResult);

/// Frequencies in MHz, temperatures in K.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvEnvironment {
    pub d0: f64,
    pub t0: f64,
    pub dd_dt: f64,
    pub ex: f64,
    pub ey: f64,
    pub b_transverse: f64,
    pub b_parallel: f64,
    pub temperature: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvDrive {
    pub omega_mw: f64,
    pub rabi_mw: f64,
    pub rabi_mw_y: f64,
    pub omega_rf: f64,
    pub rabi_rf: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvDamping {
    pub gamma_b: f64,
    pub gamma_d: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvBudget {
    /// Detected photons per second.
    pub photon_rate: f64,
    pub alpha: f64,
}

/// Absent quantities are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvSensitivity {
    pub eta_slope: f64,
    pub eta_linewidth: f64,
    pub best_frequency: f64,
    pub max_slope: f64,
    pub fwhm: f64,
    pub contrast: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NvTemperature {
    pub temperature: f64,
    pub delta_t: f64,
    pub uncertainty: f64,
}

impl From<NvEnvironment> for PhysicalEnvironment {
    fn from(e: NvEnvironment) -> Self {
        PhysicalEnvironment {
            d0: e.d0,
            t0: e.t0,
            dd_dt: e.dd_dt,
            ex: e.ex,
            ey: e.ey,
            b_transverse: e.b_transverse,
            b_parallel: e.b_parallel,
            temperature: e.temperature,
        }
    }
}

impl From<NvDrive> for DriveConfig {
    fn from(d: NvDrive) -> Self {
        DriveConfig {
            omega_mw: d.omega_mw,
            rabi_mw: d.rabi_mw,
            rabi_mw_y: d.rabi_mw_y,
            omega_rf: d.omega_rf,
            rabi_rf: d.rabi_rf,
        }
    }
}

impl From<NvDamping> for Damping {
    fn from(d: NvDamping) -> Self {
        Damping::new(d.gamma_b, d.gamma_d)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Argument(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> NvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NvStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            NvStatus::NullPointer
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            NvStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            NvStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            NvStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Argument(format!("{name} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn nv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn nv_environment_default() -> NvEnvironment {
    let e = PhysicalEnvironment::default();
    NvEnvironment {
        d0: e.d0,
        t0: e.t0,
        dd_dt: e.dd_dt,
        ex: e.ex,
        ey: e.ey,
        b_transverse: e.b_transverse,
        b_parallel: e.b_parallel,
        temperature: e.temperature,
    }
}

#[no_mangle]
pub extern "C" fn nv_drive_default() -> NvDrive {
    let d = DriveConfig::default();
    NvDrive {
        omega_mw: d.omega_mw,
        rabi_mw: d.rabi_mw,
        rabi_mw_y: d.rabi_mw_y,
        omega_rf: d.omega_rf,
        rabi_rf: d.rabi_rf,
    }
}

#[no_mangle]
pub extern "C" fn nv_damping_default() -> NvDamping {
    let d = Damping::default();
    NvDamping {
        gamma_b: d.gamma_b,
        gamma_d: d.gamma_d,
    }
}

/// The four dressed resonance frequencies (MHz), ascending.
///
/// # Safety
/// `out` must point to four writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nv_dressed_resonances(
    d: f64,
    ex: f64,
    omega_rf: f64,
    rabi_rf: f64,
    out: *mut f64,
) -> NvStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let r = nvtherm::spin::dressed_resonances(d, ex, omega_rf, rabi_rf);
        std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&r);
        Ok(())
    })
}

/// Single-crystal population depletion at microwave frequency `nu`.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_depletion(
    env: *const NvEnvironment,
    drive: *const NvDrive,
    damping: *const NvDamping,
    nu: f64,
    out_value: *mut f64,
) -> NvStatus {
    guard(|| {
        let env: PhysicalEnvironment = (*deref(env, "env")?).into();
        let drive: DriveConfig = (*deref(drive, "drive")?).into();
        let damping: Damping = (*deref(damping, "damping")?).into();
        env.check()?;
        drive.check()?;
        damping.check()?;
        *out(out_value, "out_value")? = lineshape::depletion(&env, &drive, nu, damping);
        Ok(())
    })
}

/// Strain-averaged closed-form spectrum on a linear grid. `sigma_ex = 0`
/// gives the single-crystal spectrum.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_simulate(
    env: *const NvEnvironment,
    drive: *const NvDrive,
    damping: *const NvDamping,
    alpha: f64,
    sigma_ex: f64,
    strain_nodes: usize,
    start: f64,
    stop: f64,
    points: usize,
    out_spectrum: *mut *mut NvSpectrum,
) -> NvStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let env: PhysicalEnvironment = (*deref(env, "env")?).into();
        let drive: DriveConfig = (*deref(drive, "drive")?).into();
        let damping: Damping = (*deref(damping, "damping")?).into();
        let strain = StrainDistribution::new(env.ex, sigma_ex, strain_nodes)?;
        let grid = linear_grid(start, stop, points);
        let spec = lineshape::ensemble_spectrum(&env, &drive, &grid, damping, alpha, &strain)?;
        *slot = boxed(NvSpectrum(spec));
        Ok(())
    })
}

/// Lindblad steady-state spectrum with radiative rates matching `damping`.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_oracle(
    env: *const NvEnvironment,
    drive: *const NvDrive,
    damping: *const NvDamping,
    alpha: f64,
    start: f64,
    stop: f64,
    points: usize,
    out_spectrum: *mut *mut NvSpectrum,
) -> NvStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let env: PhysicalEnvironment = (*deref(env, "env")?).into();
        let drive: DriveConfig = (*deref(drive, "drive")?).into();
        let damping: Damping = (*deref(damping, "damping")?).into();
        damping.check()?;
        let grid = linear_grid(start, stop, points);
        let spec = oracle::oracle_spectrum(&env, &drive, &grid, OracleRates::radiative(damping), alpha)?;
        *slot = boxed(NvSpectrum(spec));
        Ok(())
    })
}

/// Builds a spectrum from arrays; `sigma` may be NULL for unit weights.
///
/// # Safety
/// Non-NULL arrays must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_new(
    frequencies: *const f64,
    signal: *const f64,
    sigma: *const f64,
    len: usize,
    out_spectrum: *mut *mut NvSpectrum,
) -> NvStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let f = slice(frequencies, len, "frequencies")?.to_vec();
        let s = slice(signal, len, "signal")?.to_vec();
        let w = if sigma.is_null() {
            vec![0.0; len]
        } else {
            slice(sigma, len, "sigma")?.to_vec()
        };
        *slot = boxed(NvSpectrum(Spectrum::new(f, s, w)?));
        Ok(())
    })
}

/// Shot-noise realisation of a clean spectrum.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_add_noise(
    clean: *const NvSpectrum,
    photon_rate: f64,
    dwell_s: f64,
    seed: u64,
    out_spectrum: *mut *mut NvSpectrum,
) -> NvStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let clean = deref(clean, "clean")?;
        let noisy = lineshape::synthesize_measurement(&clean.0, photon_rate, dwell_s, seed)?;
        *slot = boxed(NvSpectrum(noisy));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_load_csv(path: *const c_char, out_spectrum: *mut *mut NvSpectrum) -> NvStatus {
    guard(|| {
        let slot = out(out_spectrum, "out_spectrum")?;
        let spec = Spectrum::load_csv(string(path, "path")?)?;
        *slot = boxed(NvSpectrum(spec));
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_save_csv(spectrum: *const NvSpectrum, path: *const c_char) -> NvStatus {
    guard(|| {
        let spec = deref(spectrum, "spectrum")?;
        spec.0.save_csv(string(path, "path")?)?;
        Ok(())
    })
}

/// Number of points; 0 for NULL.
///
/// # Safety
/// `spectrum` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_len(spectrum: *const NvSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the columns into caller buffers of `len` doubles each; any buffer
/// may be NULL to skip it.
///
/// # Safety
/// Non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_copy(
    spectrum: *const NvSpectrum,
    frequencies: *mut f64,
    signal: *mut f64,
    sigma: *mut f64,
    len: usize,
) -> NvStatus {
    guard(|| {
        let spec = &deref(spectrum, "spectrum")?.0;
        if len != spec.len() {
            return Err(Failure::Argument(format!(
                "buffer length {len} != spectrum length {}",
                spec.len()
            )));
        }
        for (dst, src) in [
            (frequencies, &spec.frequencies),
            (signal, &spec.signal),
            (sigma, &spec.sigma),
        ] {
            if !dst.is_null() {
                std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nv_spectrum_free(spectrum: *mut NvSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

unsafe fn run_fit(
    spectrum: *const NvSpectrum,
    model: FitModel,
    starts: usize,
    out_result: *mut *mut NvFitResult,
) -> Outcome {
    let slot = out(out_result, "out_result")?;
    let spec = &deref(spectrum, "spectrum")?.0;
    let opts = FitOptions {
        starts: starts.max(1),
        ..FitOptions::default()
    };
    *slot = boxed(NvFitResult(fitting::fit_auto(spec, &model, &opts)?));
    Ok(())
}

/// Fits a sum of `peaks` Lorentzian dips.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_lorentzian(
    spectrum: *const NvSpectrum,
    peaks: usize,
    starts: usize,
    out_result: *mut *mut NvFitResult,
) -> NvStatus {
    guard(|| run_fit(spectrum, FitModel::lorentzian(peaks), starts, out_result))
}

/// Fits with a model given as JSON, e.g.
/// `{"kind":"dressed_dip","omega_rf":10.5}` or
/// `{"kind":"multi_lorentzian","peaks":2}`.
///
/// # Safety
/// Pointers must be valid; `model_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_json_model(
    spectrum: *const NvSpectrum,
    model_json: *const c_char,
    starts: usize,
    out_result: *mut *mut NvFitResult,
) -> NvStatus {
    guard(|| {
        let model: FitModel = serde_json::from_str(string(model_json, "model_json")?).map_err(Error::from)?;
        model.check()?;
        run_fit(spectrum, model, starts, out_result)
    })
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_converged(result: *const NvFitResult) -> bool {
    result.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_param_count(result: *const NvFitResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.params.len())
}

/// Value and one-sigma uncertainty of a named parameter.
///
/// # Safety
/// Pointers must be valid; `out_sigma` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_param(
    result: *const NvFitResult,
    name: *const c_char,
    out_value: *mut f64,
    out_sigma: *mut f64,
) -> NvStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let name = string(name, "name")?;
        let value = r
            .param(name)
            .ok_or_else(|| Failure::Argument(format!("no parameter `{name}`")))?;
        *out(out_value, "out_value")? = value;
        if let Some(s) = out_sigma.as_mut() {
            *s = r.uncertainty(name).unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Parameter vector and uncertainties into buffers of `len` doubles; either
/// may be NULL.
///
/// # Safety
/// Non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_params(
    result: *const NvFitResult,
    values: *mut f64,
    sigmas: *mut f64,
    len: usize,
) -> NvStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        if len != r.params.len() {
            return Err(Failure::Argument(format!(
                "buffer length {len} != parameter count {}",
                r.params.len()
            )));
        }
        for (dst, src) in [(values, &r.params), (sigmas, &r.uncertainties)] {
            if !dst.is_null() {
                std::slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// Serialised result; release with [`nv_string_free`]. NULL on failure.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_to_json(result: *const NvFitResult) -> *mut c_char {
    let mut text = None;
    let status = guard(|| {
        text = Some(deref(result, "result")?.0.to_json()?);
        Ok(())
    });
    match (status, text) {
        (NvStatus::Ok, Some(t)) => c_string(t),
        _ => ptr::null_mut(),
    }
}

/// # Safety
/// `json` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_from_json(json: *const c_char, out_result: *mut *mut NvFitResult) -> NvStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        *slot = boxed(NvFitResult(FitResult::from_json(string(json, "json")?)?));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nv_fit_result_free(result: *mut NvFitResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn budget(b: &NvBudget) -> NoiseBudget {
    NoiseBudget {
        photon_rate: b.photon_rate,
        alpha: b.alpha,
        laser: None,
    }
}

/// Slope sensitivity (K/√Hz) of a fitted spectrum.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_slope_sensitivity(
    result: *const NvFitResult,
    noise: *const NvBudget,
    dd_dt: f64,
    out_report: *mut NvSensitivity,
) -> NvStatus {
    guard(|| {
        let r = &deref(result, "result")?.0;
        let b = budget(deref(noise, "noise")?);
        let s = sensitivity::slope_sensitivity(r, &b, dd_dt)?;
        *out(out_report, "out_report")? = NvSensitivity {
            eta_slope: s.eta_slope,
            eta_linewidth: s.eta_linewidth.unwrap_or(f64::NAN),
            best_frequency: s.best_frequency,
            max_slope: s.max_slope,
            fwhm: s.fwhm.unwrap_or(f64::NAN),
            contrast: s.contrast.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Linewidth-formula sensitivity (K/√Hz).
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_linewidth_sensitivity(
    fwhm: f64,
    contrast: f64,
    noise: *const NvBudget,
    dd_dt: f64,
    out_eta: *mut f64,
) -> NvStatus {
    guard(|| {
        let b = budget(deref(noise, "noise")?);
        *out(out_eta, "out_eta")? = sensitivity::linewidth_sensitivity(fwhm, contrast, &b, dd_dt)?;
        Ok(())
    })
}

/// Temperature from the splitting shift against a calibration fit taken at `t0`.
///
/// # Safety
/// Pointers must be valid for their types.
#[no_mangle]
pub unsafe extern "C" fn nv_estimate_temperature(
    fit: *const NvFitResult,
    calibration: *const NvFitResult,
    t0: f64,
    dd_dt: f64,
    out_estimate: *mut NvTemperature,
) -> NvStatus {
    guard(|| {
        let f = &deref(fit, "fit")?.0;
        let c = &deref(calibration, "calibration")?.0;
        let t = sensitivity::estimate_temperature(f, c, t0, dd_dt)?;
        *out(out_estimate, "out_estimate")? = NvTemperature {
            temperature: t.temperature,
            delta_t: t.delta_t,
            uncertainty: t.uncertainty,
        };
        Ok(())
    })
}
