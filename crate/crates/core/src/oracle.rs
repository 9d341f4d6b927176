//! Brute-force reference: Lindblad steady state of the driven three-level
//! system in the rotating frame.
//!
//! Nothing here uses the closed-form lineshape. The Hamiltonian comes from
//! [`rotating_hamiltonian`], which projects the lab-frame operator, so the
//! oracle can arbitrate the detuning mapping used by the lineshape module.
//!
//! Density matrices are vectorized row-major, `vec(ρ)[3i + j] = ρ_ij`, so
//! `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::{Damping, StrainDistribution};
use crate::spectrum::{check_grid, Spectrum};
use crate::spin::{rotating_hamiltonian, Basis, Branch, DriveConfig, PhysicalEnvironment, SpinMatrix};

pub type Liouvillian = SMatrix<Complex64, 9, 9>;
pub type DensityMatrix = Matrix3<Complex64>;

const ZERO_TOL: f64 = 1e-10;

/// Dissipation of the three-level model.
///
/// `pump_b` / `pump_d` repolarize |B⟩ / |D⟩ into |0⟩ (collapse operators
/// √pump·|0⟩⟨B|, √pump·|0⟩⟨D|); `dephase_*` are pure dephasing rates
/// (√(2γ)·|k⟩⟨k|). The coherence ⟨0|ρ|B⟩ then decays at pump_b/2 + dephase_b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRates {
    pub pump_b: f64,
    pub pump_d: f64,
    #[serde(default)]
    pub dephase_b: f64,
    #[serde(default)]
    pub dephase_d: f64,
}

impl OracleRates {
    /// Common optical pump for both levels.
    pub fn common_pump(pump_rate: f64, dephase_b: f64, dephase_d: f64) -> Self {
        Self {
            pump_b: pump_rate,
            pump_d: pump_rate,
            dephase_b,
            dephase_d,
        }
    }

    /// Purely radiative rates reproducing the given mode widths. In this
    /// limit the weak-drive steady state is exactly the closed-form one.
    pub fn radiative(damping: Damping) -> Self {
        Self {
            pump_b: 2.0 * damping.gamma_b,
            pump_d: 2.0 * damping.gamma_d,
            dephase_b: 0.0,
            dephase_d: 0.0,
        }
    }

    /// Coherence decay rates seen by the closed-form model.
    pub fn damping(&self) -> Damping {
        Damping::new(0.5 * self.pump_b + self.dephase_b, 0.5 * self.pump_d + self.dephase_d)
    }

    pub fn check(&self) -> Result<()> {
        let fields = [
            ("pump_b", self.pump_b),
            ("pump_d", self.pump_d),
            ("dephase_b", self.dephase_b),
            ("dephase_d", self.dephase_d),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and non-negative"));
            }
        }
        if fields.iter().all(|(_, v)| *v == 0.0) {
            return Err(Error::param("pump_b", "at least one dissipative rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladModel {
    /// Rotating-frame Hamiltonian in the {|0⟩, |B⟩, |D⟩} basis.
    pub hamiltonian: SpinMatrix,
    pub rates: OracleRates,
}

impl LindbladModel {
    pub fn new(hamiltonian: SpinMatrix, rates: OracleRates) -> Self {
        Self { hamiltonian, rates }
    }

    pub fn check(&self) -> Result<()> {
        if self.hamiltonian.basis != Basis::BrightDark {
            return Err(Error::param("hamiltonian", "must be in the {|0>, |B>, |D>} basis"));
        }
        self.rates.check()
    }

    fn collapse_operators(&self) -> Vec<Matrix3<Complex64>> {
        let r = &self.rates;
        let mut ops = Vec::with_capacity(4);
        let mut push = |rate: f64, row: usize, col: usize| {
            if rate > 0.0 {
                let mut m = Matrix3::zeros();
                m[(row, col)] = Complex64::new(rate.sqrt(), 0.0);
                ops.push(m);
            }
        };
        push(r.pump_b, 0, 1);
        push(r.pump_d, 0, 2);
        push(2.0 * r.dephase_b, 1, 1);
        push(2.0 * r.dephase_d, 2, 2);
        ops
    }
}

fn kron(a: &Matrix3<Complex64>, b: &Matrix3<Complex64>) -> Liouvillian {
    let mut out = Liouvillian::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..3 {
                for l in 0..3 {
                    out[(3 * i + k, 3 * j + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// L with dρ/dt = L vec(ρ).
pub fn build_liouvillian(model: &LindbladModel) -> Liouvillian {
    let h = model.hamiltonian.matrix;
    let id = Matrix3::<Complex64>::identity();
    let minus_i = Complex64::new(0.0, -1.0);
    let mut l = (kron(&h, &id) - kron(&id, &h.transpose())) * minus_i;
    for c in model.collapse_operators() {
        let cdc = c.adjoint() * c;
        l += kron(&c, &c.conjugate());
        l -= kron(&cdc, &id) * Complex64::new(0.5, 0.0);
        l -= kron(&id, &cdc.transpose()) * Complex64::new(0.5, 0.0);
    }
    l
}

/// Dimension of the Liouvillian's null space (zero singular values).
pub fn null_space_dimension(l: &Liouvillian) -> usize {
    let sv = l.singular_values();
    let scale = sv.max().max(f64::MIN_POSITIVE);
    sv.iter().filter(|s| **s <= ZERO_TOL * scale).count()
}

/// Unique steady state, trace one, Hermitian.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    model.check()?;
    let l = build_liouvillian(model);

    // Row 0 is a combination of rows 4 and 8 (trace preservation), so
    // swapping it for the trace functional keeps the system square and
    // pins the normalization.
    let mut a = l;
    for k in 0..9 {
        a[(0, k)] = Complex64::new(0.0, 0.0);
    }
    for k in [0, 4, 8] {
        a[(0, k)] = Complex64::new(1.0, 0.0);
    }
    let lu = a.full_piv_lu();
    let pivots: Vec<f64> = (0..9).map(|i| lu.u()[(i, i)].norm()).collect();
    let pmax = pivots.iter().cloned().fold(0.0, f64::max);
    let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(pmin > 1e-12 * pmax) {
        let multiplicity = null_space_dimension(&l);
        if multiplicity != 1 {
            return Err(Error::DegenerateSteadyState { multiplicity });
        }
    }
    let mut rhs = SVector::<Complex64, 9>::zeros();
    rhs[0] = Complex64::new(1.0, 0.0);
    let x = lu.solve(&rhs).ok_or_else(|| Error::DegenerateSteadyState {
        multiplicity: null_space_dimension(&l),
    })?;

    let mut rho = DensityMatrix::from_fn(|i, j| x[3 * i + j]);
    rho = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;

    let min_eig = SymmetricEigen::new(rho).eigenvalues.min();
    if min_eig < -ZERO_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min_eig,
        });
    }
    Ok(rho)
}

/// 1 − ⟨0|ρ_ss|0⟩ summed over MW-driven branches at MW frequency `nu`.
pub fn oracle_depletion(env: &PhysicalEnvironment, drive: &DriveConfig, nu: f64, rates: OracleRates) -> Result<f64> {
    let drive = drive.with_omega_mw(nu);
    let mut total = 0.0;
    for branch in Branch::ALL {
        if branch.mw_amplitude(&drive) == 0.0 {
            continue;
        }
        let h = rotating_hamiltonian(env, &drive, branch);
        let rho = steady_state(&LindbladModel::new(h, rates))?;
        total += 1.0 - rho[(0, 0)].re;
    }
    Ok(total)
}

pub fn oracle_spectrum(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    grid: &[f64],
    rates: OracleRates,
    alpha: f64,
) -> Result<Spectrum> {
    let strain = StrainDistribution {
        mean_ex: env.ex,
        sigma_ex: 0.0,
        nodes: 1,
    };
    oracle_ensemble_spectrum(env, drive, grid, rates, alpha, &strain)
}

pub fn oracle_ensemble_spectrum(
    env: &PhysicalEnvironment,
    drive: &DriveConfig,
    grid: &[f64],
    rates: OracleRates,
    alpha: f64,
    strain: &StrainDistribution,
) -> Result<Spectrum> {
    check_grid(grid)?;
    drive.check()?;
    rates.check()?;
    strain.check()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "must be finite and non-negative"));
    }
    let samples = strain.samples();
    let signal = grid
        .par_iter()
        .map(|&nu| {
            let mut acc = 0.0;
            for &(ex, w) in &samples {
                acc += w * oracle_depletion(&env.with_ex(ex), drive, nu, rates)?;
            }
            Ok(1.0 - alpha * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Spectrum::new(grid.to_vec(), signal, vec![0.0; grid.len()])?
        .with_metadata("generator", "lindblad")
        .with_metadata("environment", env)
        .with_metadata("drive", drive)
        .with_metadata("rates", rates)
        .with_metadata("alpha", alpha);
    if !strain.is_degenerate() {
        out = out.with_metadata("strain", strain);
    }
    Ok(out)
}
