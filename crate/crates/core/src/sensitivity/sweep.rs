//! Parameter sweeps: generate, add noise, fit, score, one row per point.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_auto, FitModel, FitOptions};
use crate::lineshape::{ensemble_spectrum, synthesize_measurement, Damping, StrainDistribution, DEFAULT_STRAIN_NODES};
use crate::oracle::{oracle_ensemble_spectrum, OracleRates};
use crate::spectrum::{fmt17, linear_grid, SCHEMA_VERSION};
use crate::spin::{DriveConfig, PhysicalEnvironment};

use super::{slope_sensitivity, NoiseBudget};

pub const AXIS_WHITELIST: [&str; 5] = ["rabi_rf", "rabi_mw", "rabi_mw_dbm", "laser_power_mw", "sigma_ex"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn frequencies(&self) -> Vec<f64> {
        linear_grid(self.start, self.stop, self.points)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop > self.start) {
            return Err(Error::param("grid", "needs finite start < stop"));
        }
        if self.points < 10 {
            return Err(Error::param("grid", "needs at least 10 points"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Strain-averaged closed-form lineshape.
    #[default]
    ClosedForm,
    /// Strain-averaged Lindblad steady state with radiative rates; includes
    /// saturation and power broadening.
    Lindblad,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
    pub environment: PhysicalEnvironment,
    pub drive: DriveConfig,
    pub damping: Damping,
    pub sigma_ex: f64,
    pub strain_nodes: usize,
    pub grid: GridSpec,
    pub generator: GeneratorKind,
    pub fit_model: FitModel,
    /// Multi-start count per fit.
    pub starts: usize,
    /// Integration time per spectral point (s).
    pub dwell_s: f64,
    /// Fixed laser power when it is not a sweep axis (mW).
    pub laser_power_mw: Option<f64>,
    /// MW Rabi frequency at 0 dBm for the `rabi_mw_dbm` axis (MHz).
    pub rabi_mw_at_0dbm: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axes: Vec::new(),
            environment: PhysicalEnvironment::default(),
            drive: DriveConfig::default(),
            damping: Damping::default(),
            sigma_ex: 0.0,
            strain_nodes: DEFAULT_STRAIN_NODES,
            grid: GridSpec {
                start: 2850.0,
                stop: 2890.0,
                points: 401,
            },
            generator: GeneratorKind::ClosedForm,
            fit_model: FitModel::DressedDip(Default::default()),
            starts: 1,
            dwell_s: 1.0,
            laser_power_mw: None,
            rabi_mw_at_0dbm: 1.0,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn check(&self, budget: &NoiseBudget) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::param("axes", "a sweep needs one or two axes"));
        }
        for (k, axis) in self.axes.iter().enumerate() {
            if !AXIS_WHITELIST.contains(&axis.name.as_str()) {
                return Err(Error::UnknownAxis(axis.name.clone()));
            }
            if self.axes[..k].iter().any(|a| a.name == axis.name) {
                return Err(Error::param("axes", format!("axis `{}` appears twice", axis.name)));
            }
            if axis.values.is_empty() {
                return Err(Error::param("axes", format!("axis `{}` has no values", axis.name)));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::param(
                    "axes",
                    format!("axis `{}` has non-finite values", axis.name),
                ));
            }
            if axis.name == "laser_power_mw" && budget.laser.is_none() {
                return Err(Error::param("axes", "laser_power_mw needs a laser model in the budget"));
            }
        }
        self.environment.check()?;
        self.drive.check()?;
        self.damping.check()?;
        self.grid.check()?;
        self.fit_model.check()?;
        budget.check()?;
        StrainDistribution::new(self.environment.ex, self.sigma_ex, self.strain_nodes)?;
        if !(self.dwell_s > 0.0) {
            return Err(Error::param("dwell_s", "must be positive"));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of grid point `index`; the last axis varies fastest.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.values[rest % axis.values.len()];
            rest /= axis.values.len();
        }
        out
    }
}

/// Reproducible noise seed for grid point `index`.
pub fn point_seed(master: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub axis_values: Vec<f64>,
    pub fwhm: Option<f64>,
    pub contrast: Option<f64>,
    pub eta_slope: Option<f64>,
    pub eta_linewidth: Option<f64>,
    pub best_frequency: Option<f64>,
    pub converged: bool,
    /// Empty on success.
    pub reason: String,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.reason.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["index".to_string()];
        h.extend(self.axis_names.iter().cloned());
        h.extend(
            [
                "fwhm_mhz",
                "contrast",
                "eta_slope_k_per_rthz",
                "eta_linewidth_k_per_rthz",
                "best_frequency_mhz",
                "converged",
                "status",
                "reason",
            ]
            .map(String::from),
        );
        h
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        for row in &self.rows {
            let mut rec = vec![row.index.to_string()];
            rec.extend(row.axis_values.iter().map(|v| fmt17(*v)));
            rec.extend([
                opt(row.fwhm),
                opt(row.contrast),
                opt(row.eta_slope),
                opt(row.eta_linewidth),
                opt(row.best_frequency),
                row.converged.to_string(),
                if row.ok() { "ok" } else { "failed" }.to_string(),
                row.reason.clone(),
            ]);
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("schema_version".into(), SCHEMA_VERSION.into());
            map.insert("kind".into(), "sweep".into());
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn column(&self, f: impl Fn(&SweepRow) -> Option<f64>) -> Vec<Option<f64>> {
        self.rows.iter().map(f).collect()
    }
}

struct PointSetup {
    env: PhysicalEnvironment,
    drive: DriveConfig,
    sigma_ex: f64,
    power: Option<f64>,
}

fn apply_axes(config: &SweepConfig, values: &[f64]) -> PointSetup {
    let mut p = PointSetup {
        env: config.environment,
        drive: config.drive,
        sigma_ex: config.sigma_ex,
        power: config.laser_power_mw,
    };
    let set_mw = |drive: &mut DriveConfig, rabi: f64| {
        if drive.rabi_mw_y > 0.0 {
            drive.rabi_mw_y = if drive.rabi_mw > 0.0 {
                rabi * drive.rabi_mw_y / drive.rabi_mw
            } else {
                rabi
            };
        }
        drive.rabi_mw = rabi;
    };
    for (axis, &v) in config.axes.iter().zip(values) {
        match axis.name.as_str() {
            "rabi_rf" => p.drive.rabi_rf = v,
            "rabi_mw" => set_mw(&mut p.drive, v),
            "rabi_mw_dbm" => set_mw(&mut p.drive, config.rabi_mw_at_0dbm * 10f64.powf(v / 20.0)),
            "laser_power_mw" => p.power = Some(v),
            "sigma_ex" => p.sigma_ex = v,
            other => unreachable!("axis `{other}` passed validation"),
        }
    }
    p
}

fn run_point(config: &SweepConfig, budget: &NoiseBudget, index: usize) -> Result<SweepRow> {
    let values = config.point(index);
    let setup = apply_axes(config, &values);
    let op = budget.operating_point(config.damping, setup.power);
    let strain = StrainDistribution::new(setup.env.ex, setup.sigma_ex, config.strain_nodes)?;
    let grid = config.grid.frequencies();
    let clean = match config.generator {
        GeneratorKind::ClosedForm => ensemble_spectrum(&setup.env, &setup.drive, &grid, op.damping, op.alpha, &strain)?,
        GeneratorKind::Lindblad => oracle_ensemble_spectrum(
            &setup.env,
            &setup.drive,
            &grid,
            OracleRates::radiative(op.damping),
            op.alpha,
            &strain,
        )?,
    };
    let noisy = synthesize_measurement(&clean, op.photon_rate, config.dwell_s, point_seed(config.seed, index))?;
    let mut model = config.fit_model.clone();
    if let FitModel::DressedDip(m) = &mut model {
        m.omega_rf = setup.drive.omega_rf;
        m.alpha = op.alpha;
        m.dark_branch = setup.drive.rabi_mw_y > 0.0;
    }
    let opts = FitOptions {
        starts: config.starts,
        ..FitOptions::default()
    };
    let result = fit_auto(&noisy, &model, &opts)?;
    let local_budget = NoiseBudget {
        photon_rate: op.photon_rate,
        alpha: op.alpha,
        laser: None,
    };
    let report = slope_sensitivity(&result, &local_budget, setup.env.dd_dt)?;
    let reason = if result.converged {
        String::new()
    } else {
        format!("fit did not converge: {}", result.termination)
    };
    Ok(SweepRow {
        index,
        axis_values: values,
        fwhm: report.fwhm,
        contrast: report.contrast,
        eta_slope: Some(report.eta_slope),
        eta_linewidth: report.eta_linewidth,
        best_frequency: Some(report.best_frequency),
        converged: result.converged,
        reason,
    })
}

/// Runs every grid point in parallel; rows come back in grid order and
/// failed points are kept with their reason.
pub fn sweep(config: &SweepConfig, budget: &NoiseBudget) -> Result<SweepTable> {
    config.check(budget)?;
    let rows = (0..config.point_count())
        .into_par_iter()
        .map(|index| {
            run_point(config, budget, index).unwrap_or_else(|e| SweepRow {
                index,
                axis_values: config.point(index),
                fwhm: None,
                contrast: None,
                eta_slope: None,
                eta_linewidth: None,
                best_frequency: None,
                converged: false,
                reason: format!("{}: {e}", e.kind()),
            })
        })
        .collect();
    Ok(SweepTable {
        axis_names: config.axes.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}
