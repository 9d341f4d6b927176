//! Weighted nonlinear least-squares fits of ODMR spectra.
//!
//! Two model families are supported. `MultiLorentzian` is the conventional
//! sum of Lorentzian dips with parameter layout
//! `[baseline, c_1, w_1, d_1, c_2, w_2, d_2, …]`. `DressedDip` is the
//! strain-averaged dressed-state lineshape with layout given by
//! [`DRESSED_PARAMS`]. Parameters that must stay positive are optimized as
//! logarithms, so the solver itself is unconstrained.

mod guess;
mod linewidth;
pub mod lm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{depletion, Damping, StrainDistribution, DEFAULT_ALPHA, DEFAULT_STRAIN_NODES};
use crate::spectrum::Spectrum;
use crate::spin::{DriveConfig, PhysicalEnvironment};

pub use guess::{detect_dips, initial_guess, DetectedDip};
pub use linewidth::{extract_linewidth, LinewidthEstimate};
pub use lm::LmOptions;

pub const DRESSED_PARAMS: [&str; 10] = [
    "d",
    "ex",
    "rabi_rf",
    "rabi_mw",
    "rabi_mw_y",
    "gamma_b",
    "gamma_d",
    "alpha",
    "sigma_ex",
    "baseline",
];
const DRESSED_POSITIVE: [bool; 10] = [false, false, true, true, true, true, true, true, true, true];

pub(crate) const D: usize = 0;
pub(crate) const EX: usize = 1;
pub(crate) const RABI_RF: usize = 2;
pub(crate) const RABI_MW: usize = 3;
pub(crate) const RABI_MW_Y: usize = 4;
pub(crate) const GAMMA_B: usize = 5;
pub(crate) const GAMMA_D: usize = 6;
pub(crate) const ALPHA: usize = 7;
pub(crate) const SIGMA_EX: usize = 8;
pub(crate) const BASELINE: usize = 9;

/// Dressed-state model settings. `omega_rf` is an experimental input and is
/// never fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DressedDipModel {
    pub omega_rf: f64,
    /// Include the y-polarized MW branch, which adds the lower pair of dips.
    pub dark_branch: bool,
    /// Parameter names held at their starting values.
    pub fixed: Vec<String>,
    pub strain_nodes: usize,
    /// Starting value for α.
    pub alpha: f64,
    /// Starting value for the E_x spread.
    pub sigma_ex: f64,
}

impl Default for DressedDipModel {
    fn default() -> Self {
        Self {
            omega_rf: 0.0,
            dark_branch: true,
            fixed: vec!["alpha".into(), "sigma_ex".into()],
            strain_nodes: DEFAULT_STRAIN_NODES,
            alpha: DEFAULT_ALPHA,
            sigma_ex: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModel {
    MultiLorentzian { peaks: usize },
    DressedDip(DressedDipModel),
}

impl FitModel {
    pub fn lorentzian(peaks: usize) -> Self {
        FitModel::MultiLorentzian { peaks }
    }

    pub fn family(&self) -> &'static str {
        match self {
            FitModel::MultiLorentzian { .. } => "multi_lorentzian",
            FitModel::DressedDip(_) => "dressed_dip",
        }
    }

    /// Number of dips the model produces.
    pub fn peak_count(&self) -> usize {
        match self {
            FitModel::MultiLorentzian { peaks } => *peaks,
            FitModel::DressedDip(m) if m.dark_branch => 4,
            FitModel::DressedDip(_) => 2,
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            FitModel::MultiLorentzian { peaks } => 1 + 3 * peaks,
            FitModel::DressedDip(_) => DRESSED_PARAMS.len(),
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            FitModel::MultiLorentzian { peaks } => {
                let mut names = vec!["baseline".to_string()];
                for k in 1..=*peaks {
                    names.extend([format!("center_{k}"), format!("width_{k}"), format!("depth_{k}")]);
                }
                names
            }
            FitModel::DressedDip(_) => DRESSED_PARAMS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn check(&self) -> Result<()> {
        match self {
            FitModel::MultiLorentzian { peaks } => {
                if *peaks == 0 {
                    return Err(Error::param("peaks", "must be at least 1"));
                }
            }
            FitModel::DressedDip(m) => {
                if !(m.omega_rf >= 0.0 && m.omega_rf.is_finite()) {
                    return Err(Error::param("omega_rf", "must be finite and non-negative"));
                }
                StrainDistribution::new(0.0, m.sigma_ex, m.strain_nodes)?;
                if !(m.alpha > 0.0 && m.alpha.is_finite()) {
                    return Err(Error::param("alpha", "must be positive"));
                }
                for name in &m.fixed {
                    if !DRESSED_PARAMS.contains(&name.as_str()) {
                        return Err(Error::param("fixed", format!("unknown parameter `{name}`")));
                    }
                }
            }
        }
        Ok(())
    }

    fn positive(&self) -> Vec<bool> {
        match self {
            FitModel::MultiLorentzian { peaks } => {
                let mut p = vec![true];
                for _ in 0..*peaks {
                    p.extend([false, true, true]);
                }
                p
            }
            FitModel::DressedDip(_) => DRESSED_POSITIVE.to_vec(),
        }
    }

    /// Which entries of the full parameter vector the optimizer moves.
    pub fn free_mask(&self) -> Vec<bool> {
        match self {
            FitModel::MultiLorentzian { .. } => vec![true; self.parameter_count()],
            FitModel::DressedDip(m) => DRESSED_PARAMS
                .iter()
                .enumerate()
                .map(|(i, name)| !m.fixed.iter().any(|f| f == name) && !(i == RABI_MW_Y && !m.dark_branch))
                .collect(),
        }
    }

    /// Model signal on `grid`.
    pub fn evaluate(&self, params: &[f64], grid: &[f64]) -> Vec<f64> {
        match self {
            FitModel::MultiLorentzian { .. } => grid.iter().map(|&nu| lorentzian_value(params, nu)).collect(),
            FitModel::DressedDip(m) => {
                let parts = DressedParts::new(m, params);
                grid.iter().map(|&nu| parts.value(nu)).collect()
            }
        }
    }
}

fn lorentzian_value(params: &[f64], nu: f64) -> f64 {
    let mut s = params[0];
    for peak in params[1..].chunks_exact(3) {
        let hw2 = 0.25 * peak[1] * peak[1];
        let x = nu - peak[0];
        s -= peak[2] * hw2 / (x * x + hw2);
    }
    s
}

/// Pre-assembled inputs for evaluating the dressed model.
pub(crate) struct DressedParts {
    env: PhysicalEnvironment,
    drive: DriveConfig,
    damping: Damping,
    alpha: f64,
    baseline: f64,
    samples: Vec<(f64, f64)>,
}

impl DressedParts {
    pub(crate) fn new(model: &DressedDipModel, p: &[f64]) -> Self {
        let env = PhysicalEnvironment {
            d0: p[D],
            ..PhysicalEnvironment::default()
        };
        let drive = DriveConfig {
            omega_mw: 0.0,
            rabi_mw: p[RABI_MW],
            rabi_mw_y: if model.dark_branch { p[RABI_MW_Y] } else { 0.0 },
            omega_rf: model.omega_rf,
            rabi_rf: p[RABI_RF],
        };
        let strain = StrainDistribution {
            mean_ex: p[EX],
            sigma_ex: p[SIGMA_EX],
            nodes: model.strain_nodes,
        };
        Self {
            env,
            drive,
            damping: Damping::new(p[GAMMA_B], p[GAMMA_D]),
            alpha: p[ALPHA],
            baseline: p[BASELINE],
            samples: strain.samples(),
        }
    }

    pub(crate) fn value(&self, nu: f64) -> f64 {
        let dep: f64 = self
            .samples
            .iter()
            .map(|&(ex, w)| w * depletion(&self.env.with_ex(ex), &self.drive, nu, self.damping))
            .sum();
        self.baseline * (1.0 - self.alpha * dep)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// One-sigma uncertainties; zero for fixed parameters.
    pub uncertainties: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub free: Vec<bool>,
    /// Unweighted RMS of data minus model.
    pub residual_rms: f64,
    pub chi_squared: f64,
    pub dof: usize,
    /// True when the data carried per-point sigmas.
    pub weighted: bool,
    pub peak_centers: Vec<f64>,
    /// `None` where a dip is not resolved; see `linewidth_notes`.
    pub fwhm_per_peak: Vec<Option<f64>>,
    pub contrast_per_peak: Vec<f64>,
    pub linewidth_notes: Vec<Option<String>>,
    pub converged: bool,
    pub iterations: usize,
    pub termination: String,
    /// Frequency span of the fitted data.
    pub span: (f64, f64),
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.uncertainties[i])
    }

    pub fn cost(&self) -> f64 {
        0.5 * self.chi_squared
    }

    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("schema_version".into(), crate::spectrum::SCHEMA_VERSION.into());
            map.insert("kind".into(), "fit_result".into());
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("schema_version");
            match map.remove("kind") {
                Some(serde_json::Value::String(k)) if k == "fit_result" => {}
                other => return Err(Error::Format(format!("expected a fit_result document, got {other:?}"))),
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Independent starts; the lowest final cost wins.
    pub starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lm: LmOptions::default(),
            starts: 1,
        }
    }
}

struct Transform {
    positive: Vec<bool>,
    free: Vec<usize>,
    base: Vec<f64>,
}

impl Transform {
    fn to_internal(&self, params: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&i| if self.positive[i] { params[i].ln() } else { params[i] })
            .collect()
    }

    fn to_external(&self, u: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (k, &i) in self.free.iter().enumerate() {
            p[i] = if self.positive[i] { u[k].exp() } else { u[k] };
        }
        p
    }
}

fn check_guess(model: &FitModel, guess: &[f64], spec: &Spectrum) -> Result<()> {
    if guess.len() != model.parameter_count() {
        return Err(Error::param(
            "guess",
            format!("expected {} parameters, got {}", model.parameter_count(), guess.len()),
        ));
    }
    let names = model.parameter_names();
    let free = model.free_mask();
    for (i, (&v, positive)) in guess.iter().zip(model.positive()).enumerate() {
        if !v.is_finite() {
            return Err(Error::param("guess", format!("{} is not finite", names[i])));
        }
        if positive && free[i] && v <= 0.0 {
            return Err(Error::param("guess", format!("{} must be positive", names[i])));
        }
    }
    if let FitModel::MultiLorentzian { .. } = model {
        let (lo, hi) = spec.span();
        for c in guess[1..].iter().step_by(3) {
            if *c < lo || *c > hi {
                return Err(Error::param("guess", format!("center {c} outside the grid span")));
            }
        }
    }
    Ok(())
}

/// Fits from an explicit starting vector.
pub fn fit(spec: &Spectrum, model: &FitModel, guess: &[f64]) -> Result<FitResult> {
    fit_with(spec, model, guess, &LmOptions::default())
}

pub fn fit_with(spec: &Spectrum, model: &FitModel, guess: &[f64], opts: &LmOptions) -> Result<FitResult> {
    model.check()?;
    spec.validate()?;
    check_guess(model, guess, spec)?;
    let free_mask = model.free_mask();
    let transform = Transform {
        positive: model.positive(),
        free: (0..guess.len()).filter(|&i| free_mask[i]).collect(),
        base: guess.to_vec(),
    };
    if spec.len() < transform.free.len() {
        return Err(Error::param("spectrum", "fewer points than free parameters"));
    }
    let weighted = spec.has_weights();
    let weights: Vec<f64> = if weighted {
        spec.sigma.iter().map(|s| 1.0 / s).collect()
    } else {
        vec![1.0; spec.len()]
    };
    let residual = |u: &[f64]| -> Vec<f64> {
        let p = transform.to_external(u);
        let f = model.evaluate(&p, &spec.frequencies);
        f.iter()
            .zip(&spec.signal)
            .zip(&weights)
            .map(|((fi, yi), wi)| (fi - yi) * wi)
            .collect()
    };
    let outcome = lm::minimize(residual, &transform.to_internal(guess), opts)?;
    let params = transform.to_external(&outcome.x);

    // Covariance in external coordinates: J_ext = J_int · diag(du/dθ).
    let jac = lm::jacobian(&residual, &outcome.x, opts.jacobian_step);
    let scale: Vec<f64> = transform
        .free
        .iter()
        .map(|&i| if transform.positive[i] { params[i] } else { 1.0 })
        .collect();
    let npts = spec.len();
    let nfree = transform.free.len();
    let dof = npts.saturating_sub(nfree);
    let chi_squared = 2.0 * outcome.cost;
    let mut cov_free = pseudo_inverse(&jac.tr_mul(&jac));
    if !weighted && dof > 0 {
        cov_free *= chi_squared / dof as f64;
    }
    let n = params.len();
    let mut covariance = vec![vec![0.0; n]; n];
    for (a, &i) in transform.free.iter().enumerate() {
        for (b, &j) in transform.free.iter().enumerate().skip(a) {
            let v = 0.5 * (cov_free[(a, b)] + cov_free[(b, a)]) * scale[a] * scale[b];
            covariance[i][j] = v;
            covariance[j][i] = v;
        }
    }
    let uncertainties = (0..n).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    let model_curve = model.evaluate(&params, &spec.frequencies);
    let residual_rms = (model_curve
        .iter()
        .zip(&spec.signal)
        .map(|(f, y)| (f - y).powi(2))
        .sum::<f64>()
        / npts as f64)
        .sqrt();

    let mut result = FitResult {
        model: model.clone(),
        names: model.parameter_names(),
        params,
        uncertainties,
        covariance,
        free: free_mask,
        residual_rms,
        chi_squared,
        dof,
        weighted,
        peak_centers: Vec::new(),
        fwhm_per_peak: Vec::new(),
        contrast_per_peak: Vec::new(),
        linewidth_notes: Vec::new(),
        converged: outcome.converged,
        iterations: outcome.iterations,
        termination: outcome.reason.to_string(),
        span: spec.span(),
    };
    let widths = extract_linewidth(&result, model)?;
    result.peak_centers = widths.iter().map(|w| w.center).collect();
    result.fwhm_per_peak = widths.iter().map(|w| w.fwhm).collect();
    result.contrast_per_peak = widths.iter().map(|w| w.contrast).collect();
    result.linewidth_notes = widths.into_iter().map(|w| w.reason).collect();
    Ok(result)
}

/// Heuristic start plus `opts.starts − 1` perturbed restarts.
pub fn fit_auto(spec: &Spectrum, model: &FitModel, opts: &FitOptions) -> Result<FitResult> {
    let base = initial_guess(spec, model)?;
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for start in 0..opts.starts.max(1) {
        let guess = guess::perturbed(&base, model, start);
        match fit_with(spec, model, &guess, &opts.lm) {
            Ok(r) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| (r.converged, -r.chi_squared) > (b.converged, -b.chi_squared));
                if better {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(r), _) => Ok(r),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one start runs"),
    }
}

fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if let Some(chol) = m.clone().cholesky() {
        return chol.inverse();
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(1e-12 * smax)
        .unwrap_or_else(|_| DMatrix::zeros(n, n))
}
