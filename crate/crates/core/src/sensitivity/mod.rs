//! Shot-noise-limited temperature sensitivity and temperature readout.
//!
//! Two figures of merit are provided. The slope method evaluates
//! `η = √(S/R) / (|dS/dν|·|dD/dT|)` at the steepest point of a model curve;
//! the linewidth method uses the Lorentzian closed form
//! `η = 4/(3√3) · FWHM / (C·√R·|dD/dT|)`.

mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{FitModel, FitResult};
use crate::lineshape::Damping;

pub use sweep::{
    point_seed, sweep, GeneratorKind, GridSpec, SweepAxis, SweepConfig, SweepRow, SweepTable, AXIS_WHITELIST,
};

/// Max-slope constant of a Lorentzian, 4/(3√3).
pub const LORENTZIAN_SLOPE_FACTOR: f64 = 0.769_800_358_919_501;

const SLOPE_GRID: usize = 20_001;

/// Laser-power phenomenology: count rate and optical pumping grow linearly
/// with power and the contrast saturates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserModel {
    /// counts/s per mW.
    pub rate_per_mw: f64,
    /// Optical pumping rate per mW (MHz/mW).
    pub pump_per_mw: f64,
    /// Pump rate at which the contrast reaches half of α (MHz).
    pub gamma_sat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBudget {
    /// Detected counts/s at baseline.
    pub photon_rate: f64,
    /// Contrast scale mapping depletion to signal.
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laser: Option<LaserModel>,
}

impl Default for NoiseBudget {
    fn default() -> Self {
        Self {
            photon_rate: 1e6,
            alpha: crate::lineshape::DEFAULT_ALPHA,
            laser: None,
        }
    }
}

/// Operating point after applying a laser power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    pub photon_rate: f64,
    pub alpha: f64,
    pub damping: Damping,
}

impl NoiseBudget {
    pub fn new(photon_rate: f64) -> Result<Self> {
        let b = Self {
            photon_rate,
            ..Self::default()
        };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.photon_rate > 0.0 && self.photon_rate.is_finite()) {
            return Err(Error::param("photon_rate", "must be positive"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", "must be finite and non-negative"));
        }
        if let Some(l) = &self.laser {
            if !(l.rate_per_mw > 0.0) {
                return Err(Error::param("rate_per_mw", "must be positive"));
            }
            if !(l.pump_per_mw >= 0.0) {
                return Err(Error::param("pump_per_mw", "must be non-negative"));
            }
            if !(l.gamma_sat > 0.0) {
                return Err(Error::param("gamma_sat", "must be positive"));
            }
        }
        Ok(())
    }

    /// Count rate, contrast and mode widths at laser power `power_mw`.
    /// Without a laser model or power the budget is used as is.
    pub fn operating_point(&self, damping: Damping, power_mw: Option<f64>) -> OperatingPoint {
        match (self.laser, power_mw) {
            (Some(l), Some(p)) => {
                let pump = l.pump_per_mw * p;
                OperatingPoint {
                    photon_rate: l.rate_per_mw * p,
                    alpha: self.alpha * pump / (pump + l.gamma_sat),
                    damping: Damping::new(damping.gamma_b + 0.5 * pump, damping.gamma_d + 0.5 * pump),
                }
            }
            _ => OperatingPoint {
                photon_rate: self.photon_rate,
                alpha: self.alpha,
                damping,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// K/√Hz, max-slope method.
    pub eta_slope: f64,
    /// K/√Hz, Lorentzian linewidth formula; absent without a resolved dip.
    pub eta_linewidth: Option<f64>,
    /// MHz, steepest point of the curve.
    pub best_frequency: f64,
    /// |dS/dν| at `best_frequency` (1/MHz).
    pub max_slope: f64,
    pub signal_at_best: f64,
    pub photon_rate: f64,
    pub dd_dt: f64,
    pub fwhm: Option<f64>,
    pub contrast: Option<f64>,
}

fn check_dd_dt(dd_dt: f64) -> Result<()> {
    if dd_dt == 0.0 || !dd_dt.is_finite() {
        return Err(Error::param("dd_dt", "must be finite and nonzero"));
    }
    Ok(())
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Slope-method sensitivity of an arbitrary curve over `span`.
pub fn slope_sensitivity_curve(
    curve: impl Fn(f64) -> f64,
    span: (f64, f64),
    photon_rate: f64,
    dd_dt: f64,
) -> Result<SensitivityReport> {
    check_dd_dt(dd_dt)?;
    if !(photon_rate > 0.0 && photon_rate.is_finite()) {
        return Err(Error::param("photon_rate", "must be positive"));
    }
    let (lo, hi) = span;
    if !(hi > lo) {
        return Err(Error::param("span", "must have positive width"));
    }
    let step = (hi - lo) / (SLOPE_GRID - 1) as f64;
    let h = 1e-6 * (hi - lo);
    let slope = |nu: f64| (curve(nu + h) - curve(nu - h)) / (2.0 * h);
    let grid: Vec<f64> = (0..SLOPE_GRID).map(|i| lo + step * i as f64).collect();
    let slopes: Vec<f64> = grid.iter().map(|&nu| slope(nu).abs()).collect();
    let (imax, &smax) = slopes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is not empty");
    let scale = grid
        .iter()
        .map(|&nu| curve(nu).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    if !(smax > 1e-12 * scale / (hi - lo)) {
        return Err(Error::NoSensitivity);
    }
    let a = grid[imax.saturating_sub(1)];
    let b = grid[(imax + 1).min(SLOPE_GRID - 1)];
    let nu = golden_max(|x| slope(x).abs(), a, b);
    let (nu, max_slope) = if slope(nu).abs() >= smax {
        (nu, slope(nu).abs())
    } else {
        (grid[imax], smax)
    };
    let s = curve(nu);
    Ok(SensitivityReport {
        eta_slope: (s.max(0.0) / photon_rate).sqrt() / (max_slope * dd_dt.abs()),
        eta_linewidth: None,
        best_frequency: nu,
        max_slope,
        signal_at_best: s,
        photon_rate,
        dd_dt,
        fwhm: None,
        contrast: None,
    })
}

/// Both sensitivity figures for a fitted spectrum. The linewidth figure uses
/// the resolved dip with the best width-to-contrast ratio.
pub fn slope_sensitivity(result: &FitResult, budget: &NoiseBudget, dd_dt: f64) -> Result<SensitivityReport> {
    budget.check()?;
    let model = result.model.clone();
    let params = result.params.clone();
    let curve = move |nu: f64| model.evaluate(&params, &[nu])[0];
    let mut report = slope_sensitivity_curve(curve, result.span, budget.photon_rate, dd_dt)?;
    let best = result
        .fwhm_per_peak
        .iter()
        .zip(&result.contrast_per_peak)
        .filter_map(|(w, c)| w.filter(|_| *c > 0.0).map(|w| (w, *c)))
        .min_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)));
    if let Some((w, c)) = best {
        report.fwhm = Some(w);
        report.contrast = Some(c);
        report.eta_linewidth = Some(linewidth_sensitivity(w, c, budget, dd_dt)?);
    }
    Ok(report)
}

pub fn linewidth_sensitivity(fwhm: f64, contrast: f64, budget: &NoiseBudget, dd_dt: f64) -> Result<f64> {
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(Error::param("fwhm", "must be positive"));
    }
    if !(contrast > 0.0 && contrast.is_finite()) {
        return Err(Error::param("contrast", "must be positive"));
    }
    budget.check()?;
    check_dd_dt(dd_dt)?;
    Ok(LORENTZIAN_SLOPE_FACTOR * fwhm / (contrast * budget.photon_rate.sqrt() * dd_dt.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureEstimate {
    pub temperature: f64,
    pub delta_t: f64,
    /// One-sigma, from both fit covariances.
    pub uncertainty: f64,
    pub d_fit: f64,
    pub d_calibration: f64,
}

/// Zero-field splitting and its variance from a fit: the `d` parameter of a
/// dressed fit, or the mean Lorentzian center.
pub fn splitting_from_fit(fit: &FitResult) -> (f64, f64) {
    match fit.model {
        FitModel::DressedDip(_) => (fit.params[0], fit.covariance[0][0]),
        FitModel::MultiLorentzian { peaks } => {
            let idx: Vec<usize> = (0..peaks).map(|k| 1 + 3 * k).collect();
            let n = peaks as f64;
            let mean = idx.iter().map(|&i| fit.params[i]).sum::<f64>() / n;
            let var = idx
                .iter()
                .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
                .map(|(i, j)| fit.covariance[i][j])
                .sum::<f64>()
                / (n * n);
            (mean, var)
        }
    }
}

pub fn estimate_temperature(
    fit: &FitResult,
    calibration: &FitResult,
    t0: f64,
    dd_dt: f64,
) -> Result<TemperatureEstimate> {
    check_dd_dt(dd_dt)?;
    if fit.model.family() != calibration.model.family() || fit.params.len() != calibration.params.len() {
        return Err(Error::ModelMismatch(format!(
            "fit is {}, calibration is {}",
            fit.model.family(),
            calibration.model.family()
        )));
    }
    if !fit.converged || !calibration.converged {
        return Err(Error::param("fit", "both fits must have converged"));
    }
    let (d_fit, var_fit) = splitting_from_fit(fit);
    let (d_cal, var_cal) = splitting_from_fit(calibration);
    let delta_t = (d_fit - d_cal) / dd_dt;
    Ok(TemperatureEstimate {
        temperature: t0 + delta_t,
        delta_t,
        uncertainty: (var_fit.max(0.0) + var_cal.max(0.0)).sqrt() / dd_dt.abs(),
        d_fit,
        d_calibration: d_cal,
    })
}

#[cfg(test)]
mod tests;
