//! Levenberg–Marquardt damped least squares.
//!
//! Minimizes `E(p) = ½ Σ r_i(p)²` for a residual map `r` with Jacobian `J`.
//! Each step solves `(JᵀJ + λI) δ = −Jᵀr`; a step that lowers `E` is
//! accepted and `λ` shrinks by 10, otherwise it is rejected and `λ` grows
//! by 10.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{cholesky_solve, dot, Matrix};
use crate::{Error, Result};

/// A differentiable residual map.
pub trait LeastSquaresProblem {
    fn residuals(&self, params: &[f64]) -> Vec<f64>;

    /// `m x n` Jacobian of the residuals.
    fn jacobian(&self, params: &[f64]) -> Matrix;
}

/// `½ Σ r²`
pub fn half_sse(residuals: &[f64]) -> f64 {
    0.5 * dot(residuals, residuals)
}

/// Damping schedule and stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    pub max_iterations: usize,
    /// Stop when the error falls to this value.
    pub error_tol: f64,
    /// Stop when `‖Jᵀr‖∞` falls to this value.
    pub gradient_tol: f64,
    /// Stop when an accepted step improves the error by less than this
    /// fraction.
    pub relative_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            lambda_up: 10.0,
            lambda_down: 10.0,
            lambda_max: 1e10,
            max_iterations: 200,
            error_tol: 0.0,
            gradient_tol: 1e-12,
            relative_tol: 1e-12,
        }
    }
}

/// Outcome of one damped step attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct LmStep {
    pub params: Vec<f64>,
    pub lambda: f64,
    pub error: f64,
    pub accepted: bool,
    /// Proposed step `δ` (whether or not it was accepted).
    pub delta: Vec<f64>,
}

/// Solves `(JᵀJ + λI) δ = −Jᵀr`. For wide Jacobians (`m < n`) the
/// equivalent `δ = −Jᵀ (JJᵀ + λI)⁻¹ r` keeps the system `m x m`.
fn damped_step(jac: &Matrix, residuals: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let (m, n) = (jac.rows(), jac.cols());
    if m < n {
        let mut outer = Matrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = dot(jac.row(i), jac.row(j));
                outer[(i, j)] = v;
                outer[(j, i)] = v;
            }
            outer[(i, i)] += lambda;
        }
        let y = cholesky_solve(&outer, residuals)?;
        Some(jac.tr_mul_vec(&y).into_iter().map(|v| -v).collect())
    } else {
        let mut normal = jac.gram();
        for i in 0..n {
            normal[(i, i)] += lambda;
        }
        let g: Vec<f64> = jac.tr_mul_vec(residuals).into_iter().map(|v| -v).collect();
        cholesky_solve(&normal, &g)
    }
}

/// One Levenberg–Marquardt attempt from `params` with damping `lambda`.
///
/// Fails with [`Error::Stalled`] once a rejection would push `lambda`
/// past `config.lambda_max`.
pub fn lm_step<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &[f64],
    lambda: f64,
    config: &LmConfig,
) -> Result<LmStep> {
    let residuals = problem.residuals(params);
    let jac = problem.jacobian(params);
    step_from(problem, params, &residuals, &jac, lambda, config)
}

fn step_from<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    params: &[f64],
    residuals: &[f64],
    jac: &Matrix,
    lambda: f64,
    config: &LmConfig,
) -> Result<LmStep> {
    let error = half_sse(residuals);
    let reject = |delta: Vec<f64>| {
        let raised = lambda * config.lambda_up;
        if raised > config.lambda_max {
            return Err(Error::Stalled { lambda: raised });
        }
        Ok(LmStep {
            params: params.to_vec(),
            lambda: raised,
            error,
            accepted: false,
            delta,
        })
    };
    let Some(delta) = damped_step(jac, residuals, lambda) else {
        return reject(vec![0.0; params.len()]);
    };
    let trial: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + d).collect();
    let trial_error = half_sse(&problem.residuals(&trial));
    if trial_error.is_finite() && trial_error < error {
        Ok(LmStep {
            params: trial,
            lambda: lambda / config.lambda_down,
            error: trial_error,
            accepted: true,
            delta,
        })
    } else {
        reject(delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Error or gradient below tolerance.
    Converged,
    /// Accepted step improved the error by less than the relative tolerance.
    SmallImprovement,
    MaxIterations,
    /// Damping exceeded its maximum without finding a descent step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeReport {
    pub params: Vec<f64>,
    pub error: f64,
    pub lambda: f64,
    pub iterations: usize,
    /// Error after each accepted step, starting with the initial error.
    pub trace: Vec<f64>,
    pub termination: Termination,
}

/// Iterates accepted steps until a stopping rule fires.
pub fn minimize<P: LeastSquaresProblem + ?Sized>(
    problem: &P,
    initial: Vec<f64>,
    lambda0: f64,
    config: &LmConfig,
) -> MinimizeReport {
    let mut params = initial;
    let mut lambda = lambda0;
    let mut residuals = problem.residuals(&params);
    let mut error = half_sse(&residuals);
    let mut trace = vec![error];
    let mut iterations = 0;
    let termination = loop {
        if iterations >= config.max_iterations {
            break Termination::MaxIterations;
        }
        if error <= config.error_tol {
            break Termination::Converged;
        }
        let jac = problem.jacobian(&params);
        let grad = jac.tr_mul_vec(&residuals);
        if grad.iter().all(|g| g.abs() <= config.gradient_tol) {
            break Termination::Converged;
        }
        iterations += 1;
        let step = loop {
            match step_from(problem, &params, &residuals, &jac, lambda, config) {
                Ok(step) if step.accepted => break Some(step),
                Ok(step) => lambda = step.lambda,
                Err(_) => break None,
            }
        };
        let Some(step) = step else {
            break Termination::Stalled;
        };
        let improvement = (error - step.error) / error.max(f64::MIN_POSITIVE);
        params = step.params;
        lambda = step.lambda;
        error = step.error;
        residuals = problem.residuals(&params);
        trace.push(error);
        if improvement < config.relative_tol {
            break Termination::SmallImprovement;
        }
    };
    MinimizeReport {
        params,
        error,
        lambda,
        iterations,
        trace,
        termination,
    }
}

/// Central-difference Jacobian, for checking analytic derivatives.
pub fn central_difference_jacobian<P: LeastSquaresProblem + ?Sized>(problem: &P, params: &[f64], step: f64) -> Matrix {
    let m = problem.residuals(params).len();
    let n = params.len();
    let mut jac = Matrix::zeros(m, n);
    let mut probe = params.to_vec();
    for j in 0..n {
        probe[j] = params[j] + step;
        let plus = problem.residuals(&probe);
        probe[j] = params[j] - step;
        let minus = problem.residuals(&probe);
        probe[j] = params[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    jac
}

/// Largest relative entry-wise discrepancy between two Jacobians,
/// relative to the larger of the two Frobenius norms.
pub fn jacobian_discrepancy(a: &Matrix, b: &Matrix) -> f64 {
    let mut diff = 0.0;
    let mut scale = 0.0f64;
    let mut sb = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let d = a[(i, j)] - b[(i, j)];
            diff += d * d;
            scale += a[(i, j)] * a[(i, j)];
            sb += b[(i, j)] * b[(i, j)];
        }
    }
    libm::sqrt(diff) / libm::sqrt(scale.max(sb)).max(f64::MIN_POSITIVE)
}

/// Residuals `A x − b` of a linear system, handy as a test problem.
#[derive(Debug, Clone)]
pub struct LinearResiduals {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl LeastSquaresProblem for LinearResiduals {
    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        self.a
            .mul_vec(params)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| ax - b)
            .collect()
    }

    fn jacobian(&self, _params: &[f64]) -> Matrix {
        self.a.clone()
    }
}
