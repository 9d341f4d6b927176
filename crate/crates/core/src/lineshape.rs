//! Closed-form CW-ODMR lineshapes.
//!
//! The dressed-state signal comes from the steady state of the linearized
//! (bosonic) bright/dark-mode model: the MW drives one mode with strength
//! λ, the RF couples it to the other with strength J, and each mode decays
//! at its own rate. The ground-state population is
//!
//! ```text
//! p0 = 1 − |λ(ω_d − iΓ_d)/Δ|² − |λJ/Δ|²,   Δ = (ω_b − iΓ_b)(ω_d − iΓ_d) − J²
//! ```
//!
//! and the photoluminescence is modeled as `1 − α(1 − p0)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;
use crate::spectrum::{check_grid, Spectrum};
use crate::spin::{Branch, DriveConfig, PhysicalEnvironment};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_GAMMA_B: f64 = 1.0;
pub const DEFAULT_GAMMA_D: f64 = 0.1;
pub const DEFAULT_STRAIN_NODES: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BosonicModelParams {
    /// Detuning of the MW-driven mode (MHz).
    pub omega_b: f64,
    /// Detuning of the RF-coupled partner mode (MHz).
    pub omega_d: f64,
    pub j: f64,
    pub lambda_b: f64,
    pub gamma_b: f64,
    pub gamma_d: f64,
}

/// Mode decay rates Γ_b (bright) and Γ_d (dark), MHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Damping {
    pub gamma_b: f64,
    pub gamma_d: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Self {
            gamma_b: DEFAULT_GAMMA_B,
            gamma_d: DEFAULT_GAMMA_D,
        }
    }
}

impl Damping {
    pub fn new(gamma_b: f64, gamma_d: f64) -> Self {
        Self { gamma_b, gamma_d }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.gamma_b > 0.0 && self.gamma_b.is_finite()) {
            return Err(Error::param("gamma_b", "must be positive"));
        }
        if !(self.gamma_d > 0.0 && self.gamma_d.is_finite()) {
            return Err(Error::param("gamma_d", "must be positive"));
        }
        Ok(())
    }
}

/// How the partner-mode detuning is derived from the drive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OmegaDConvention {
    /// ω_d = D − E_x − ω_MW + ω_RF: |D⟩ sits at D − E_x.
    #[default]
    Corrected,
    /// ω_d = D + E_x − ω_MW + ω_RF. Kept only to show it misplaces the dips.
    AsPrinted,
}

/// Bright-branch model parameters for a MW frequency `omega_mw`.
pub fn map_drive_to_model(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    omega_mw: f64,
    damping: Damping,
) -> BosonicModelParams {
    map_branch(
        env,
        drive,
        omega_mw,
        damping,
        Branch::Bright,
        OmegaDConvention::Corrected,
    )
}

pub fn map_branch(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    omega_mw: f64,
    damping: Damping,
    branch: Branch,
    convention: OmegaDConvention,
) -> BosonicModelParams {
    let d = env.d();
    let j = 0.5 * drive.rabi_rf;
    match branch {
        Branch::Bright => {
            let omega_d = match convention {
                OmegaDConvention::Corrected => d - env.ex - omega_mw + drive.omega_rf,
                OmegaDConvention::AsPrinted => d + env.ex - omega_mw + drive.omega_rf,
            };
            BosonicModelParams {
                omega_b: d + env.ex - omega_mw,
                omega_d,
                j,
                lambda_b: 0.5 * drive.rabi_mw,
                gamma_b: damping.gamma_b,
                gamma_d: damping.gamma_d,
            }
        }
        // The MW drives |D⟩ directly; |B⟩ joins by absorbing an RF photon.
        Branch::Dark => BosonicModelParams {
            omega_b: d - env.ex - omega_mw,
            omega_d: d + env.ex - omega_mw - drive.omega_rf,
            j,
            lambda_b: 0.5 * drive.rabi_mw_y,
            gamma_b: damping.gamma_d,
            gamma_d: damping.gamma_b,
        },
    }
}

/// Steady-state probability of |0⟩.
pub fn p0(model: &BosonicModelParams) -> f64 {
    1.0 - depopulation(model)
}

fn depopulation(m: &BosonicModelParams) -> f64 {
    if m.lambda_b == 0.0 {
        return 0.0;
    }
    let wb = Complex64::new(m.omega_b, -m.gamma_b);
    let wd = Complex64::new(m.omega_d, -m.gamma_d);
    let delta = wb * wd - m.j * m.j;
    let driven = -m.lambda_b * wd / delta;
    let partner = m.lambda_b * m.j / delta;
    driven.norm_sqr() + partner.norm_sqr()
}

/// 1 − p0 summed over the branches that carry MW amplitude.
pub fn depletion_with(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    omega_mw: f64,
    damping: Damping,
    convention: OmegaDConvention,
) -> f64 {
    Branch::ALL
        .iter()
        .filter(|b| b.mw_amplitude(drive) != 0.0)
        .map(|&b| depopulation(&map_branch(env, drive, omega_mw, damping, b, convention)))
        .sum()
}

pub fn depletion(env: &PhysicalEnvironment, drive: &DriveConfig, omega_mw: f64, damping: Damping) -> f64 {
    depletion_with(env, drive, omega_mw, damping, OmegaDConvention::Corrected)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be finite and non-negative"));
    }
    Ok(())
}

pub fn spectrum(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    grid: &[f64],
    damping: Damping,
    alpha: f64,
) -> Result<Spectrum> {
    spectrum_with(env, drive, grid, damping, alpha, OmegaDConvention::Corrected)
}

pub fn spectrum_with(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    grid: &[f64],
    damping: Damping,
    alpha: f64,
    convention: OmegaDConvention,
) -> Result<Spectrum> {
    check_grid(grid)?;
    damping.check()?;
    drive.check()?;
    check_alpha(alpha)?;
    let signal: Vec<f64> = grid
        .par_iter()
        .map(|&nu| 1.0 - alpha * depletion_with(env, drive, nu, damping, convention))
        .collect();
    Ok(Spectrum::new(grid.to_vec(), signal, vec![0.0; grid.len()])?
        .with_metadata("generator", "closed_form")
        .with_metadata("environment", env)
        .with_metadata("drive", drive)
        .with_metadata("damping", damping)
        .with_metadata("alpha", alpha))
}

/// Gaussian spread of E_x across the ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrainDistribution {
    pub mean_ex: f64,
    pub sigma_ex: f64,
    /// Gauss–Hermite node count; odd.
    pub nodes: usize,
}

impl StrainDistribution {
    pub fn new(mean_ex: f64, sigma_ex: f64, nodes: usize) -> Result<Self> {
        let s = Self {
            mean_ex,
            sigma_ex,
            nodes,
        };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.sigma_ex >= 0.0 && self.sigma_ex.is_finite()) {
            return Err(Error::param("sigma_ex", "must be finite and non-negative"));
        }
        if !self.mean_ex.is_finite() {
            return Err(Error::param("mean_ex", "must be finite"));
        }
        if self.nodes == 0 || self.nodes.is_multiple_of(2) {
            return Err(Error::param("nodes", "must be odd and at least 1"));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma_ex == 0.0 || self.nodes == 1
    }

    /// (E_x, weight) pairs; weights sum to one.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        if self.is_degenerate() {
            return vec![(self.mean_ex, 1.0)];
        }
        let (x, w) = gauss_hermite(self.nodes);
        x.iter()
            .zip(&w)
            .map(|(xi, wi)| (self.mean_ex + self.sigma_ex * xi, *wi))
            .collect()
    }
}

/// Strain-averaged spectrum. The per-point quadrature sum runs in node order.
pub fn ensemble_spectrum(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    grid: &[f64],
    damping: Damping,
    alpha: f64,
    strain: &StrainDistribution,
) -> Result<Spectrum> {
    strain.check()?;
    if strain.is_degenerate() {
        let env = env.with_ex(strain.mean_ex);
        return Ok(spectrum(&env, drive, grid, damping, alpha)?.with_metadata("strain", strain));
    }
    check_grid(grid)?;
    damping.check()?;
    drive.check()?;
    check_alpha(alpha)?;
    let samples = strain.samples();
    let signal: Vec<f64> = grid
        .par_iter()
        .map(|&nu| {
            let mut acc = 0.0;
            for &(ex, w) in &samples {
                acc += w * depletion(&env.with_ex(ex), drive, nu, damping);
            }
            1.0 - alpha * acc
        })
        .collect();
    Ok(Spectrum::new(grid.to_vec(), signal, vec![0.0; grid.len()])?
        .with_metadata("generator", "closed_form")
        .with_metadata("environment", env)
        .with_metadata("drive", drive)
        .with_metadata("damping", damping)
        .with_metadata("alpha", alpha)
        .with_metadata("strain", strain))
}

/// Sum of Lorentzian dips: `1 − Σ d_k (w_k/2)² / ((ν − c_k)² + (w_k/2)²)`.
pub fn lorentzian_signal(nu: f64, centers: &[f64], widths: &[f64], depths: &[f64]) -> f64 {
    let mut s = 1.0;
    for k in 0..centers.len() {
        let hw2 = 0.25 * widths[k] * widths[k];
        let x = nu - centers[k];
        s -= depths[k] * hw2 / (x * x + hw2);
    }
    s
}

pub fn lorentzian_spectrum(centers: &[f64], widths: &[f64], depths: &[f64], grid: &[f64]) -> Result<Spectrum> {
    if centers.len() != widths.len() || centers.len() != depths.len() {
        return Err(Error::param(
            "widths",
            "centers, widths and depths must have equal length",
        ));
    }
    if widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::param("widths", "must be positive"));
    }
    check_grid(grid)?;
    let signal = grid
        .iter()
        .map(|&nu| lorentzian_signal(nu, centers, widths, depths))
        .collect();
    Ok(Spectrum::new(grid.to_vec(), signal, vec![0.0; grid.len()])?
        .with_metadata("generator", "lorentzian")
        .with_metadata("centers", centers)
        .with_metadata("widths", widths)
        .with_metadata("depths", depths))
}

/// Adds Gaussian-approximated shot noise: a point with normalized signal S
/// collects `photon_rate·dwell·S` counts, so its noise is √(S/(rate·dwell)).
pub fn synthesize_measurement(clean: &Spectrum, photon_rate: f64, dwell: f64, seed: u64) -> Result<Spectrum> {
    if !(photon_rate > 0.0) {
        return Err(Error::param("photon_rate", "must be positive"));
    }
    if !(dwell > 0.0) {
        return Err(Error::param("dwell", "must be positive"));
    }
    let counts = photon_rate * dwell;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signal = Vec::with_capacity(clean.len());
    let mut sigma = Vec::with_capacity(clean.len());
    for &s in &clean.signal {
        let sd = (s.max(0.0) / counts).sqrt();
        let z: f64 = StandardNormal.sample(&mut rng);
        signal.push(s + sd * z);
        sigma.push(sd);
    }
    let mut out = Spectrum::new(clean.frequencies.clone(), signal, sigma)?;
    out.metadata = clean.metadata.clone();
    Ok(out
        .with_metadata("photon_rate", photon_rate)
        .with_metadata("dwell_s", dwell)
        .with_metadata("noise_seed", seed))
}
