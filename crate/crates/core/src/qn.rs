//! BFGS local maximizer with Armijo backtracking.

use crate::error::{Error, Result};
use crate::objective::ObjectiveHandle;
use crate::vector::{check_dims, check_finite, distance, dot, norm};

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QnSettings {
    pub max_iter: usize,
    /// Relative function-change tolerance, `|dphi| < tol_f * max(1, |phi|)`.
    pub tol_f: f64,
    /// Absolute step-length tolerance.
    pub tol_x: f64,
}

impl Default for QnSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_f: 0.05,
            tol_x: 0.01,
        }
    }
}

impl QnSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol_f > 0.0 && self.tol_x > 0.0) {
            return Err(Error::InvalidArgument(
                "QN tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QnResult {
    pub x_star: Vec<f64>,
    /// `phi(x_star)`.
    pub phi_star: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|x_star - x0|`.
    pub displacement: f64,
}

/// Maximizes `phi` from `x0` with BFGS.
///
/// Works on `-phi` internally. The inverse-Hessian approximation starts at the
/// identity, is rescaled by `s.y / y.y` before the first update and falls back
/// to the identity whenever the curvature condition fails. The very first
/// trial step has unit length. A budget-limited handle stops the iteration as
/// soon as the budget is spent.
pub fn maximize_local(
    objective: &ObjectiveHandle<'_>,
    x0: &[f64],
    settings: &QnSettings,
) -> Result<QnResult> {
    settings.validate()?;
    check_dims(objective.dim(), x0.len())?;
    check_finite("QN start", x0)?;
    let n = x0.len();

    let mut x = x0.to_vec();
    let mut phi = objective.value(&x);
    if !phi.is_finite() {
        return Err(Error::NonFiniteStart);
    }
    let mut g = objective.gradient(&x);

    let mut h = identity(n);
    let mut scaled = false;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iter {
        if !g.iter().all(|v| v.is_finite()) || objective.exhausted() {
            break;
        }
        let gnorm = norm(&g);
        if gnorm == 0.0 {
            converged = true;
            break;
        }

        let mut p = mat_vec(&h, &g);
        let mut slope = dot(&g, &p);
        if !(slope > 0.0) {
            h = identity(n);
            scaled = false;
            p = g.clone();
            slope = gnorm * gnorm;
        }

        let mut alpha = if scaled {
            1.0
        } else {
            (1.0 / norm(&p)).min(1.0)
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
            let phi_trial = objective.value(&trial);
            if phi_trial.is_finite() && phi_trial >= phi + ARMIJO_C1 * alpha * slope {
                accepted = Some((trial, phi_trial));
                break;
            }
            if objective.exhausted() {
                break;
            }
            alpha *= BACKTRACK;
        }
        let Some((x_new, phi_new)) = accepted else {
            break;
        };

        let g_new = objective.gradient(&x_new);
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // gradient difference of the minimized function -phi
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let dphi = phi_new - phi;
        let step = norm(&s);

        x = x_new;
        phi = phi_new;
        g = g_new;

        if dphi.abs() < settings.tol_f * phi.abs().max(1.0) || step < settings.tol_x {
            converged = true;
            break;
        }

        let sy = dot(&s, &y);
        let ny = norm(&y);
        if !(sy > 1e-10 * step * ny) || !y.iter().all(|v| v.is_finite()) {
            h = identity(n);
            scaled = false;
            continue;
        }
        if !scaled {
            let gamma = sy / (ny * ny);
            h.iter_mut().for_each(|v| *v *= gamma);
            scaled = true;
        }
        bfgs_update(&mut h, &s, &y, sy);
    }

    let displacement = distance(&x, x0);
    Ok(QnResult {
        x_star: x,
        phi_star: phi,
        iterations,
        converged,
        displacement,
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let coef = (1.0 + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}
