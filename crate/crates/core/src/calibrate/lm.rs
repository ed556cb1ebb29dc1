//! Damped least squares (Levenberg–Marquardt) with finite-difference
//! Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite step used to probe curvature along the step direction.
const ACCEL_PROBE: f64 = 0.1;
/// Largest accepted ratio of acceleration to velocity.
const ACCEL_RATIO: f64 = 0.75;

/// Singular values below this fraction of the largest mark a direction as
/// unconstrained.
pub const RANK_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop when the cost drops by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when the scaled step is below this.
    pub step_tolerance: f64,
    /// Threshold on the scaled gradient ∞-norm relative to `1 + cost`.
    pub gradient_tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        LmSettings {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 1σ, from the inverse curvature scaled by the residual variance.
    pub uncertainties: Vec<f64>,
    /// Parameter covariance, same scaling as `uncertainties`.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residuals `(y − model)/σ`.
    pub residuals: Vec<f64>,
    pub chi_square: f64,
    pub dof: usize,
    pub iterations: usize,
    /// ∞-norm of the scaled gradient at the optimum.
    pub gradient_norm: f64,
}

impl FitResult {
    pub fn reduced_chi_square(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.chi_square / self.dof as f64
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.values[k])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.uncertainties[k])
    }
}

/// A weighted least-squares problem: `residuals(x)` returns `(y − f(x))/σ`;
/// `Err` marks `x` as outside the model's domain.
pub struct Problem<'a> {
    pub names: Vec<String>,
    /// Typical magnitude of each parameter, used to scale steps.
    pub scales: Vec<f64>,
    pub residuals: &'a (dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
}

impl Problem<'_> {
    fn eval(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let x: Vec<f64> = u.iter().zip(&self.scales).map(|(a, s)| a * s).collect();
        let r = (self.residuals)(&x)?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite residual"));
        }
        Ok(DVector::from_vec(r))
    }

    /// Central-difference Jacobian in scaled coordinates.
    fn jacobian(&self, u: &DVector<f64>, r0: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
        use rayon::prelude::*;
        let cols: Vec<Result<DVector<f64>>> = (0..u.len())
            .into_par_iter()
            .map(|k| {
                let step = h * u[k].abs().max(1.0);
                let mut up = u.clone();
                up[k] += step;
                let mut dn = u.clone();
                dn[k] -= step;
                match (self.eval(&up), self.eval(&dn)) {
                    (Ok(a), Ok(b)) => Ok((a - b) / (2.0 * step)),
                    (Ok(a), Err(_)) => Ok((a - r0) / step),
                    (Err(_), Ok(b)) => Ok((r0 - b) / step),
                    (Err(e), Err(_)) => Err(e),
                }
            })
            .collect();
        let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }
}

/// Null directions (in physical parameter space, unit-normalized) of a
/// scaled Jacobian.
fn null_directions(jac: &DMatrix<f64>, names: &[String], scales: &[f64]) -> Vec<Vec<(String, f64)>> {
    let n = jac.ncols();
    let svd = jac.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= RANK_TOLERANCE * smax || smax == 0.0 {
            let v: Vec<f64> = (0..n).map(|c| vt[(k, c)] * scales[c]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            out.push(names.iter().cloned().zip(v.iter().map(|x| x / norm)).collect());
        }
    }
    // Fewer residuals than parameters leaves directions not represented in
    // the thin SVD.
    if jac.nrows() < n {
        out.push(names.iter().cloned().zip(std::iter::repeat(f64::NAN)).collect());
    }
    out
}

pub fn levenberg_marquardt(problem: &Problem, x0: &[f64], settings: &LmSettings) -> Result<FitResult> {
    let n = x0.len();
    if problem.names.len() != n || problem.scales.len() != n {
        return Err(Error::invalid("parameter names, scales and initial values differ in length"));
    }
    let mut u = DVector::from_iterator(n, x0.iter().zip(&problem.scales).map(|(x, s)| x / s));
    let mut r = problem.eval(&u)?;
    let m = r.len();
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut jac = problem.jacobian(&u, &r, settings.fd_step)?;
    let mut converged = false;
    while iterations < settings.max_iterations {
        iterations += 1;
        let g = jac.transpose() * &r;
        if g.amax() < settings.gradient_tolerance * (1.0 + cost) {
            converged = true;
            break;
        }
        let a = jac.transpose() * &jac;
        let mut accepted = false;
        let mut small_step = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-12);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let velocity = chol.solve(&(-&g));
            // Geodesic acceleration: second-order correction along the
            // velocity from one extra residual evaluation.
            let probe = ACCEL_PROBE;
            let accel = match problem.eval(&(&u + probe * &velocity)) {
                Ok(rp) => {
                    let curvature = ((rp - &r) / probe - &jac * &velocity) * (2.0 / probe);
                    Some(chol.solve(&(-(jac.transpose() * curvature))))
                }
                Err(_) => None,
            };
            let delta = match accel {
                Some(a) if 2.0 * a.norm() <= ACCEL_RATIO * velocity.norm() => &velocity + 0.5 * a,
                Some(_) => {
                    lambda *= 10.0;
                    if velocity.norm() < settings.step_tolerance * (u.norm() + settings.step_tolerance) {
                        small_step = true;
                        break;
                    }
                    continue;
                }
                None => velocity,
            };
            let trial = &u + &delta;
            small_step = delta.norm() < settings.step_tolerance * (u.norm() + settings.step_tolerance);
            match problem.eval(&trial) {
                Ok(rt) if rt.norm_squared() <= cost => {
                    let new_cost = rt.norm_squared();
                    let gain = cost - new_cost;
                    u = trial;
                    r = rt;
                    cost = new_cost;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if gain <= settings.cost_tolerance * cost.max(f64::MIN_POSITIVE) || small_step {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    if small_step {
                        break;
                    }
                    lambda *= 10.0;
                }
            }
        }
        jac = problem.jacobian(&u, &r, settings.fd_step)?;
        if converged || (!accepted && small_step) {
            converged = true;
            break;
        }
        if !accepted {
            break;
        }
    }
    let nulls = null_directions(&jac, &problem.names, &problem.scales);
    if !nulls.is_empty() {
        return Err(Error::Underconstrained { null_directions: nulls });
    }
    if !converged {
        return Err(Error::FitFailed {
            reason: format!("no convergence; cost {cost:.6e}, damping {lambda:.1e}"),
            iterations,
        });
    }
    let dof = m.saturating_sub(n);
    let s2 = if dof > 0 { cost / dof as f64 } else { 1.0 };
    let a = jac.transpose() * &jac;
    let cov = a
        .try_inverse()
        .ok_or_else(|| Error::FitFailed {
            reason: "curvature matrix is singular".into(),
            iterations,
        })?;
    let g = jac.transpose() * &r;
    Ok(FitResult {
        names: problem.names.clone(),
        values: u.iter().zip(&problem.scales).map(|(a, s)| a * s).collect(),
        uncertainties: (0..n).map(|k| (cov[(k, k)].max(0.0) * s2).sqrt() * problem.scales[k]).collect(),
        covariance: (0..n)
            .map(|i| (0..n).map(|j| cov[(i, j)] * s2 * problem.scales[i] * problem.scales[j]).collect())
            .collect(),
        residuals: r.iter().copied().collect(),
        chi_square: cost,
        dof,
        iterations,
        gradient_norm: g.amax(),
    })
}
