//! NV ground-state spin physics.
//!
//! Energies and drive amplitudes are linear frequencies in MHz, times in µs.
//! Drive amplitudes are stored directly as Rabi frequencies (γ_e·B already
//! applied); [`GAMMA_E_MHZ_PER_MT`] converts field values when needed.
//!
//! The reduced three-level model works in the {|0⟩, |B⟩, |D⟩} basis with
//! |B⟩ = (|+1⟩ + |−1⟩)/√2 at D + E_x and |D⟩ = (|+1⟩ − |−1⟩)/√2 at D − E_x.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Electron gyromagnetic ratio in MHz/mT.
pub const GAMMA_E_MHZ_PER_MT: f64 = 28.025;
pub const DEFAULT_D0_MHZ: f64 = 2870.0;
pub const DEFAULT_T0_K: f64 = 300.0;
/// Zero-field-splitting temperature slope, −74.2 kHz/K.
pub const DEFAULT_DD_DT_MHZ_PER_K: f64 = -0.0742;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalEnvironment {
    /// Zero-field splitting at `t0` (MHz).
    pub d0: f64,
    /// Reference temperature (K).
    pub t0: f64,
    /// dD/dT (MHz/K), negative for NV.
    pub dd_dt: f64,
    /// Strain / electric-field splitting along x (MHz).
    pub ex: f64,
    /// Strain along y (MHz). Carried for the lab-frame Hamiltonian only.
    pub ey: f64,
    /// Transverse Zeeman frequency g·μ_B·B_x (MHz).
    pub b_transverse: f64,
    /// Parallel Zeeman frequency γ_e·B_z (MHz).
    pub b_parallel: f64,
    /// Current temperature (K).
    pub temperature: f64,
}

impl Default for PhysicalEnvironment {
    fn default() -> Self {
        Self {
            d0: DEFAULT_D0_MHZ,
            t0: DEFAULT_T0_K,
            dd_dt: DEFAULT_DD_DT_MHZ_PER_K,
            ex: 0.0,
            ey: 0.0,
            b_transverse: 0.0,
            b_parallel: 0.0,
            temperature: DEFAULT_T0_K,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    ZeroField,
    /// Dressed-state mode: field perpendicular to the NV axis.
    Transverse,
    /// Conventional mode: field along the NV axis.
    Parallel,
}

impl PhysicalEnvironment {
    /// D at the environment's own temperature.
    pub fn d(&self) -> f64 {
        zero_field_splitting(self, self.temperature)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_ex(mut self, ex: f64) -> Self {
        self.ex = ex;
        self
    }

    pub fn field_mode(&self) -> Result<FieldMode> {
        match (self.b_transverse != 0.0, self.b_parallel != 0.0) {
            (false, false) => Ok(FieldMode::ZeroField),
            (true, false) => Ok(FieldMode::Transverse),
            (false, true) => Ok(FieldMode::Parallel),
            (true, true) => Err(Error::param(
                "b_transverse",
                "only one of b_transverse and b_parallel may be nonzero",
            )),
        }
    }

    /// Hard validation; returns regime warnings that do not stop a run.
    pub fn check(&self) -> Result<Vec<String>> {
        let fields = [
            ("d0", self.d0),
            ("t0", self.t0),
            ("dd_dt", self.dd_dt),
            ("ex", self.ex),
            ("ey", self.ey),
            ("b_transverse", self.b_transverse),
            ("b_parallel", self.b_parallel),
            ("temperature", self.temperature),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.d0 <= 0.0 {
            return Err(Error::param("d0", "must be positive"));
        }
        let mut warnings = Vec::new();
        if self.field_mode()? == FieldMode::Transverse {
            let bt = self.b_transverse.abs();
            if bt > 0.1 * self.d0 {
                warnings.push(format!(
                    "regime: b_transverse = {bt} MHz is not much smaller than D = {} MHz",
                    self.d0
                ));
            }
            if self.ey.abs() > 0.1 * bt {
                warnings.push(format!(
                    "regime: ey = {} MHz is not much smaller than b_transverse = {bt} MHz",
                    self.ey
                ));
            }
        }
        Ok(warnings)
    }
}

/// Linear temperature model of the zero-field splitting.
pub fn zero_field_splitting(env: &PhysicalEnvironment, temperature: f64) -> f64 {
    env.d0 + env.dd_dt * (temperature - env.t0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    /// Microwave frequency (MHz); only used by the lab-frame Hamiltonian,
    /// spectra sweep it.
    pub omega_mw: f64,
    /// MW Rabi amplitude along x, γ_e·B_MW^(x) (MHz).
    pub rabi_mw: f64,
    /// MW Rabi amplitude along y, γ_e·B_MW^(y) (MHz). Drives |0⟩ ↔ |D⟩.
    pub rabi_mw_y: f64,
    /// RF frequency (MHz).
    pub omega_rf: f64,
    /// RF Rabi amplitude along z, γ_e·B_RF^(z) (MHz).
    pub rabi_rf: f64,
}

impl DriveConfig {
    pub fn with_omega_mw(mut self, omega_mw: f64) -> Self {
        self.omega_mw = omega_mw;
        self
    }

    pub fn check(&self) -> Result<()> {
        let fields = [
            ("omega_mw", self.omega_mw),
            ("rabi_mw", self.rabi_mw),
            ("rabi_mw_y", self.rabi_mw_y),
            ("omega_rf", self.omega_rf),
            ("rabi_rf", self.rabi_rf),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
            if name != "omega_mw" && value < 0.0 {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// {|+1⟩, |0⟩, |−1⟩}
    Zeeman,
    /// {|0⟩, |B⟩, |D⟩}
    BrightDark,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMatrix {
    pub basis: Basis,
    pub matrix: Matrix3<Complex64>,
}

impl SpinMatrix {
    pub fn new(basis: Basis, matrix: Matrix3<Complex64>) -> Self {
        Self { basis, matrix }
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let diff = self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.max_hermitian_defect() <= HERMITIAN_TOL
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let eig = SymmetricEigen::new(self.matrix);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-1 operators in the {|+1⟩, |0⟩, |−1⟩} basis.
pub fn spin_ops() -> [Matrix3<Complex64>; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, s);
    let sx = Matrix3::new(z, c(s), z, c(s), z, c(s), z, c(s), z);
    // S_y = (S+ − S−)/(2i)
    let sy = Matrix3::new(z, -i, z, i, z, -i, z, i, z);
    let sz = Matrix3::new(c(1.0), z, z, z, z, z, z, z, c(-1.0));
    [sx, sy, sz]
}

/// Columns are |0⟩, |B⟩, |D⟩ expressed in the Zeeman basis.
fn bright_dark_transform() -> Matrix3<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0);
    Matrix3::new(z, c(s), c(s), c(1.0), z, z, z, c(s), c(-s))
}

fn static_hamiltonian(env: &PhysicalEnvironment) -> Matrix3<Complex64> {
    let [sx, sy, sz] = spin_ops();
    let d = c(env.d());
    (sz * sz) * d
        + (sx * sx - sy * sy) * c(env.ex)
        + (sx * sy + sy * sx) * c(env.ey)
        + sx * c(env.b_transverse)
        + sz * c(env.b_parallel)
}

/// Instantaneous lab-frame Hamiltonian at time `t_us` (µs), in MHz.
pub fn build_lab_hamiltonian(env: &PhysicalEnvironment, drive: &DriveConfig, t_us: f64) -> SpinMatrix {
    let [sx, sy, sz] = spin_ops();
    let tau = std::f64::consts::TAU;
    let mw = (tau * drive.omega_mw * t_us).cos();
    let rf = (tau * drive.omega_rf * t_us).cos();
    let h = static_hamiltonian(env)
        + sx * c(drive.rabi_mw * mw)
        + sy * c(drive.rabi_mw_y * mw)
        + sz * c(drive.rabi_rf * rf);
    SpinMatrix::new(Basis::Zeeman, h)
}

/// Which MW-driven transition a rotating frame follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// x-polarized MW drives |0⟩ ↔ |B⟩; |D⟩ is reached through the RF.
    Bright,
    /// y-polarized MW drives |0⟩ ↔ |D⟩; |B⟩ is reached through the RF.
    Dark,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Bright, Branch::Dark];

    pub fn mw_amplitude(self, drive: &DriveConfig) -> f64 {
        match self {
            Branch::Bright => drive.rabi_mw,
            Branch::Dark => drive.rabi_mw_y,
        }
    }
}

/// Rotating-frame Hamiltonian for the bright branch, {|0⟩, |B⟩, |D⟩} basis.
pub fn build_rotating_hamiltonian(env: &PhysicalEnvironment, drive: &DriveConfig) -> SpinMatrix {
    rotating_hamiltonian(env, drive, Branch::Bright)
}

/// Projects the lab-frame Hamiltonian onto {|0⟩, |B⟩, |D⟩}, moves to the
/// frame rotating with the branch's MW/RF photons and keeps only the
/// co-rotating terms.
///
/// Static couplings between levels whose frame frequencies differ are
/// dropped along with the counter-rotating drive components, which removes
/// E_y and the Zeeman terms from the reduced model.
pub fn rotating_hamiltonian(env: &PhysicalEnvironment, drive: &DriveConfig, branch: Branch) -> SpinMatrix {
    let u = bright_dark_transform();
    let ud = u.adjoint();
    let h_static = ud * static_hamiltonian(env) * u;
    let [sx, sy, sz] = spin_ops();

    let frame = match branch {
        Branch::Bright => [0.0, drive.omega_mw, drive.omega_mw - drive.omega_rf],
        Branch::Dark => [0.0, drive.omega_mw + drive.omega_rf, drive.omega_mw],
    };
    let tol = 1e-9 * (1.0 + drive.omega_mw.abs() + drive.omega_rf.abs());
    let drives = [
        (ud * sx * u, drive.rabi_mw, drive.omega_mw),
        (ud * sy * u, drive.rabi_mw_y, drive.omega_mw),
        (ud * sz * u, drive.rabi_rf, drive.omega_rf),
    ];

    let mut h = Matrix3::<Complex64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let beat = frame[i] - frame[j];
            if beat.abs() < tol {
                h[(i, j)] += h_static[(i, j)];
            }
            for (op, amp, freq) in &drives {
                if *amp == 0.0 {
                    continue;
                }
                // cos(ωt) = (e^{iωt} + e^{−iωt})/2; each exponential survives
                // when it cancels the frame beat e^{i(f_i − f_j)t}.
                let mut weight = 0.0;
                if (beat - freq).abs() < tol {
                    weight += 0.5;
                }
                if (beat + freq).abs() < tol {
                    weight += 0.5;
                }
                h[(i, j)] += op[(i, j)] * c(amp * weight);
            }
        }
        h[(i, i)] -= c(frame[i]);
    }
    SpinMatrix::new(Basis::BrightDark, h)
}

/// The four MW frequencies at which RF-dressed states are resonant, ascending.
pub fn dressed_resonances(d: f64, ex: f64, omega_rf: f64, rabi_rf: f64) -> [f64; 4] {
    let root = (2.0 * ex - omega_rf).hypot(rabi_rf);
    let mut out = [
        0.5 * (2.0 * d - omega_rf - root),
        0.5 * (2.0 * d - omega_rf + root),
        0.5 * (2.0 * d + omega_rf - root),
        0.5 * (2.0 * d + omega_rf + root),
    ];
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadeningForm {
    /// ½[√(δ² + Ω²) − Ω]
    Exact,
    /// δ²/(4Ω), valid for Ω ≫ δ.
    Taylor,
}

/// Residual resonance shift of a dressed line for a strain deviation `delta_ex`
/// under RF Rabi frequency `rabi_rf`.
pub fn residual_broadening(delta_ex: f64, rabi_rf: f64, form: BroadeningForm) -> Result<f64> {
    if !(delta_ex >= 0.0) {
        return Err(Error::param("delta_ex", "must be non-negative"));
    }
    if !(rabi_rf >= 0.0) {
        return Err(Error::param("rabi_rf", "must be non-negative"));
    }
    if delta_ex == 0.0 {
        return Ok(0.0);
    }
    match form {
        // Rationalized to avoid cancellation when rabi_rf ≫ delta_ex.
        BroadeningForm::Exact => {
            let sq = delta_ex * delta_ex;
            Ok(sq / (2.0 * (delta_ex.hypot(rabi_rf) + rabi_rf)))
        }
        BroadeningForm::Taylor => {
            if rabi_rf == 0.0 {
                return Err(Error::TaylorRegime);
            }
            Ok(0.25 * delta_ex * delta_ex / rabi_rf)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bare_env() -> PhysicalEnvironment {
        PhysicalEnvironment::default()
    }

    #[test]
    fn zero_field_only_is_diagonal() {
        let env = bare_env();
        let h = build_lab_hamiltonian(&env, &DriveConfig::default(), 0.37);
        let d = env.d();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j && i != 1 { d } else { 0.0 };
                assert_abs_diff_eq!(h.get(i, j).re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(h.get(i, j).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn strain_splits_into_bright_and_dark() {
        let env = PhysicalEnvironment { ex: 5.0, ..bare_env() };
        let ev = build_lab_hamiltonian(&env, &DriveConfig::default(), 0.0).eigenvalues();
        let d = env.d();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[1], d - 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[2], d + 5.0, epsilon = 1e-9);
    }

    #[test]
    fn parallel_field_matches_hand_diagonalization() {
        // With E = 0 and a field along z the Zeeman basis is already the
        // eigenbasis: energies D + b, 0, D − b.
        let env = PhysicalEnvironment {
            b_parallel: 10.0,
            ..bare_env()
        };
        let h = build_lab_hamiltonian(&env, &DriveConfig::default(), 0.0);
        let ev = h.eigenvalues();
        let d = env.d();
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[1], d - 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[2], d + 10.0, epsilon = 1e-9);

        // With strain too, the ±1 block is [[D+b, E], [E, D−b]].
        let env = PhysicalEnvironment {
            b_parallel: 10.0,
            ex: 3.0,
            ..bare_env()
        };
        let ev = build_lab_hamiltonian(&env, &DriveConfig::default(), 0.0).eigenvalues();
        let split = 10.0f64.hypot(3.0);
        assert_abs_diff_eq!(ev[1], d - split, epsilon = 1e-9);
        assert_abs_diff_eq!(ev[2], d + split, epsilon = 1e-9);
    }

    #[test]
    fn lab_hamiltonian_is_hermitian_with_everything_on() {
        let env = PhysicalEnvironment {
            ex: 4.0,
            ey: 0.3,
            b_transverse: 40.0,
            ..bare_env()
        };
        let drive = DriveConfig {
            omega_mw: 2874.0,
            rabi_mw: 0.4,
            rabi_mw_y: 0.2,
            omega_rf: 8.0,
            rabi_rf: 2.0,
        };
        for k in 0..20 {
            let h = build_lab_hamiltonian(&env, &drive, 0.013 * k as f64);
            assert!(h.is_hermitian());
        }
    }

    #[test]
    fn undriven_rotating_frame_is_diagonal() {
        let env = PhysicalEnvironment {
            ex: 5.0,
            b_transverse: 30.0,
            ..bare_env()
        };
        let d = env.d();
        let drive = DriveConfig {
            omega_mw: d + 5.0,
            omega_rf: 7.0,
            ..Default::default()
        };
        let h = build_rotating_hamiltonian(&env, &drive);
        assert_eq!(h.basis, Basis::BrightDark);
        assert_abs_diff_eq!(h.get(0, 0).re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h.get(1, 1).re, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h.get(2, 2).re, 7.0 - 10.0, epsilon = 1e-9);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_abs_diff_eq!(h.get(i, j).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotating_couplings_are_half_rabi() {
        let env = PhysicalEnvironment { ex: 5.0, ..bare_env() };
        let drive = DriveConfig {
            omega_mw: 2873.0,
            rabi_mw: 0.2,
            omega_rf: 10.0,
            rabi_rf: 2.0,
            ..Default::default()
        };
        let h = build_rotating_hamiltonian(&env, &drive);
        assert_abs_diff_eq!(h.get(0, 1).norm(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(h.get(1, 2).norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.get(0, 2).norm(), 0.0, epsilon = 1e-12);
        assert!(h.is_hermitian());

        let dark = rotating_hamiltonian(
            &env,
            &DriveConfig {
                rabi_mw_y: 0.3,
                ..drive
            },
            Branch::Dark,
        );
        assert_abs_diff_eq!(dark.get(0, 2).norm(), 0.15, epsilon = 1e-12);
        assert_abs_diff_eq!(dark.get(0, 1).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dark.get(1, 2).norm(), 1.0, epsilon = 1e-12);
        let d = env.d();
        assert_abs_diff_eq!(dark.get(1, 1).re, d + 5.0 - 2873.0 - 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dark.get(2, 2).re, d - 5.0 - 2873.0, epsilon = 1e-9);
    }

    #[test]
    fn rotating_eigenvalues_reproduce_dressed_resonances() {
        // At a bright-branch resonance the {B, D} block has a zero
        // eigenvalue, degenerate with |0⟩.
        let env = PhysicalEnvironment { ex: 4.0, ..bare_env() };
        let (omega_rf, rabi_rf) = (9.0, 3.0);
        let res = dressed_resonances(env.d(), env.ex, omega_rf, rabi_rf);
        for nu in [res[2], res[3]] {
            let drive = DriveConfig {
                omega_mw: nu,
                omega_rf,
                rabi_rf,
                ..Default::default()
            };
            let ev = build_rotating_hamiltonian(&env, &drive).eigenvalues();
            let near_zero = ev.iter().filter(|e| e.abs() < 1e-9).count();
            assert_eq!(near_zero, 2, "eigenvalues {ev:?} at {nu}");
        }
        for nu in [res[0], res[1]] {
            let drive = DriveConfig {
                omega_mw: nu,
                omega_rf,
                rabi_rf,
                ..Default::default()
            };
            let ev = rotating_hamiltonian(&env, &drive, Branch::Dark).eigenvalues();
            let near_zero = ev.iter().filter(|e| e.abs() < 1e-9).count();
            assert_eq!(near_zero, 2, "eigenvalues {ev:?} at {nu}");
        }
    }

    #[test]
    fn dressed_resonance_examples() {
        assert_eq!(
            dressed_resonances(2870.0, 5.0, 10.0, 0.0),
            [2865.0, 2865.0, 2875.0, 2875.0]
        );
        assert_eq!(
            dressed_resonances(2870.0, 5.0, 10.0, 2.0),
            [2864.0, 2866.0, 2874.0, 2876.0]
        );
        assert_eq!(
            dressed_resonances(2870.0, 5.0, 0.0, 0.0),
            [2865.0, 2865.0, 2875.0, 2875.0]
        );
    }

    #[test]
    fn residual_broadening_examples() {
        for form in [BroadeningForm::Exact, BroadeningForm::Taylor] {
            assert_eq!(residual_broadening(0.0, 2.0, form).unwrap(), 0.0);
        }
        let exact = residual_broadening(0.2, 2.0, BroadeningForm::Exact).unwrap();
        let taylor = residual_broadening(0.2, 2.0, BroadeningForm::Taylor).unwrap();
        // ½(√4.04 − 2)
        assert_abs_diff_eq!(exact, 0.5 * (4.04f64.sqrt() - 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(exact, 0.00498756211, epsilon = 1e-11);
        assert_abs_diff_eq!(taylor, 0.005, epsilon = 1e-15);
        assert!((exact - taylor).abs() / taylor < 2.5e-3);
        assert_abs_diff_eq!(residual_broadening(1.0, 0.0, BroadeningForm::Exact).unwrap(), 0.5);
        assert!(matches!(
            residual_broadening(1.0, 0.0, BroadeningForm::Taylor),
            Err(Error::TaylorRegime)
        ));
        assert!(residual_broadening(-1.0, 1.0, BroadeningForm::Exact).is_err());
    }

    #[test]
    fn zero_field_splitting_is_linear() {
        let env = bare_env();
        assert_eq!(zero_field_splitting(&env, env.t0), env.d0);
        assert_abs_diff_eq!(
            zero_field_splitting(&env, env.t0 + 1.0),
            env.d0 - 0.0742,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            zero_field_splitting(&env, env.t0 - 10.0),
            env.d0 + 0.742,
            epsilon = 1e-12
        );
    }

    #[test]
    fn environment_checks() {
        let both = PhysicalEnvironment {
            b_transverse: 1.0,
            b_parallel: 1.0,
            ..bare_env()
        };
        assert!(both.check().is_err());
        let bad = PhysicalEnvironment { d0: -1.0, ..bare_env() };
        assert!(bad.check().is_err());
        let strong = PhysicalEnvironment {
            b_transverse: 1000.0,
            ..bare_env()
        };
        assert_eq!(strong.check().unwrap().len(), 1);
        let ok = PhysicalEnvironment {
            b_transverse: 50.0,
            ey: 0.1,
            ..bare_env()
        };
        assert!(ok.check().unwrap().is_empty());
        assert_eq!(ok.field_mode().unwrap(), FieldMode::Transverse);
    }

    proptest! {
        #[test]
        fn narrowing_is_monotone(delta in 1e-3f64..5.0, a in 0.0f64..50.0, step in 1e-3f64..10.0) {
            let lo = residual_broadening(delta, a, BroadeningForm::Exact).unwrap();
            let hi = residual_broadening(delta, a + step, BroadeningForm::Exact).unwrap();
            prop_assert!(hi < lo);
        }

        #[test]
        fn narrowing_approaches_taylor_law(delta in 1e-3f64..5.0, factor in 20.0f64..1e4) {
            let rabi = factor * delta;
            let exact = residual_broadening(delta, rabi, BroadeningForm::Exact).unwrap();
            let limit = delta * delta / 4.0;
            prop_assert!((exact * rabi - limit).abs() / limit < 0.01);
        }

        #[test]
        fn resonances_even_in_rabi(d in 2800.0f64..2900.0, ex in 0.0f64..20.0, w in 0.0f64..40.0, r in 0.0f64..10.0) {
            prop_assert_eq!(dressed_resonances(d, ex, w, r), dressed_resonances(d, ex, w, -r));
        }

        #[test]
        fn rotating_frame_is_hermitian(ex in 0.0f64..20.0, mw in 2800.0f64..2950.0, rf in 0.1f64..40.0,
                                       rm in 0.0f64..5.0, rr in 0.0f64..10.0, bt in 0.0f64..100.0) {
            let env = PhysicalEnvironment { ex, b_transverse: bt, ..PhysicalEnvironment::default() };
            let drive = DriveConfig { omega_mw: mw, rabi_mw: rm, rabi_mw_y: rm, omega_rf: rf, rabi_rf: rr };
            for branch in Branch::ALL {
                prop_assert!(rotating_hamiltonian(&env, &drive, branch).is_hermitian());
            }
        }
    }
}
