//! Levenberg–Marquardt with Nielsen's damping update.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which an accepted step ends the run.
    pub cost_tolerance: f64,
    /// Step norm, relative to the parameter norm, that ends the run.
    pub step_tolerance: f64,
    /// Relative central-difference step.
    pub jacobian_step: f64,
    pub max_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-12,
            jacobian_step: 1e-6,
            max_damping: 1e12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    /// ½·Σ r².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub reason: &'static str,
}

/// Central-difference Jacobian, columns assembled in parameter order.
pub fn jacobian<F>(residual: &F, x: &[f64], rel_step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = residual(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let h = rel_step * x[j].abs().max(1.0);
        probe[j] = x[j] + h;
        let plus = residual(&probe);
        probe[j] = x[j] - h;
        let minus = residual(&probe);
        probe[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn half_norm_sqr(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Minimizes ½‖r(x)‖² starting from `x0`.
pub fn minimize<F>(residual: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut cost = half_norm_sqr(&r);
    if !cost.is_finite() {
        return Err(Error::param("guess", "model is not finite at the starting point"));
    }
    let done = |x: Vec<f64>, cost, iterations, converged, reason| LmOutcome {
        x,
        cost,
        iterations,
        converged,
        reason,
    };
    if n == 0 || cost == 0.0 {
        return Ok(done(x, cost, 0, true, "zero residual"));
    }

    let mut jac = jacobian(&residual, &x, opts.jacobian_step);
    let mut jtj = jac.tr_mul(&jac);
    let mut grad = jac.tr_mul(&DVector::from_column_slice(&r));
    let mut mu = 1e-3 * (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut nu = 2.0;

    for iteration in 1..=opts.max_iterations {
        let mut system = jtj.clone();
        for i in 0..n {
            system[(i, i)] += mu;
        }
        let Some(chol) = system.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            if mu > opts.max_damping {
                return Err(Error::SingularFit { damping: mu });
            }
            continue;
        };
        let step = chol.solve(&(-&grad));
        let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step.norm() <= opts.step_tolerance * (x_norm + opts.step_tolerance) {
            return Ok(done(x, cost, iteration, true, "step below tolerance"));
        }
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let r_trial = residual(&trial);
        let cost_trial = half_norm_sqr(&r_trial);
        let predicted = 0.5 * step.dot(&(mu * &step - &grad));
        let rho = if cost_trial.is_finite() && predicted > 0.0 {
            (cost - cost_trial) / predicted
        } else {
            -1.0
        };
        if rho > 0.0 {
            let decrease = cost - cost_trial;
            x = trial;
            r = r_trial;
            let previous = cost;
            cost = cost_trial;
            if cost == 0.0 || decrease <= opts.cost_tolerance * previous {
                return Ok(done(x, cost, iteration, true, "cost change below tolerance"));
            }
            jac = jacobian(&residual, &x, opts.jacobian_step);
            jtj = jac.tr_mul(&jac);
            grad = jac.tr_mul(&DVector::from_column_slice(&r));
            mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > opts.max_damping {
                // No descent direction left at working precision.
                return Ok(done(x, cost, iteration, true, "damping limit at stationary point"));
            }
        }
    }
    Ok(done(x, cost, opts.max_iterations, false, "iteration limit"))
}
