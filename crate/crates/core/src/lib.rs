//! Simulation and analysis toolkit for CW-ODMR thermometry with RF-dressed
//! NV-center spin states.
//!
//! - [`spin`]: ground-state Hamiltonians, dressed resonances, strain narrowing
//! - [`lineshape`]: closed-form dressed-state signal, strain ensembles,
//!   Lorentzian baseline and shot-noise synthesis
//! - [`oracle`]: Lindblad steady-state reference for the lineshape
//! - [`fitting`]: weighted Levenberg–Marquardt fits and linewidth extraction
//! - [`sensitivity`]: shot-noise-limited temperature sensitivity, temperature
//!   readout and parameter sweeps
//! - [`config`] / [`cli`]: strict run configuration and the `nvtherm` workflows
//!
//! ```
//! use nvtherm::fitting::{extract_linewidth, fit_auto, FitModel, FitOptions};
//! use nvtherm::lineshape::{ensemble_spectrum, synthesize_measurement, Damping, StrainDistribution};
//! use nvtherm::sensitivity::{slope_sensitivity, NoiseBudget};
//! use nvtherm::spectrum::linear_grid;
//! use nvtherm::{DriveConfig, PhysicalEnvironment};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let env = PhysicalEnvironment { d0: 2880.0, ex: 5.0, ..Default::default() };
//! let drive = DriveConfig { rabi_mw: 0.6, rabi_mw_y: 0.6, omega_rf: 10.5, rabi_rf: 4.0, ..Default::default() };
//! let grid = linear_grid(2866.0, 2905.0, 781);
//! let strain = StrainDistribution::new(env.ex, 0.0, 1)?;
//! let clean = ensemble_spectrum(&env, &drive, &grid, Damping::new(0.5, 0.3), 0.05, &strain)?;
//! let noisy = synthesize_measurement(&clean, 1e6, 1.0, 7)?;
//!
//! let model: FitModel = serde_json::from_str(r#"{"kind":"dressed_dip","omega_rf":10.5}"#)?;
//! let fit = fit_auto(&noisy, &model, &FitOptions::default())?;
//! let widths = extract_linewidth(&fit, &model)?;
//! let report = slope_sensitivity(&fit, &NoiseBudget::new(1e6)?, env.dd_dt)?;
//! assert_eq!(widths.len(), 4);
//! assert!(fit.converged && report.eta_slope > 0.0);
//! # Ok(())
//! # }
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fitting;
pub mod lineshape;
pub mod oracle;
pub mod quadrature;
pub mod sensitivity;
pub mod spectrum;
pub mod spin;

pub use error::{Error, Result};
pub use lineshape::{BosonicModelParams, Damping, StrainDistribution};
pub use oracle::{LindbladModel, OracleRates};
pub use spectrum::Spectrum;
pub use spin::{DriveConfig, PhysicalEnvironment, SpinMatrix};
