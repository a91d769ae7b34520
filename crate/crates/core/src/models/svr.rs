//! nu-support vector regression with an RBF kernel.
//!
//! The dual, with `β = α − α*`,
//!
//! ```text
//! min ½ βᵀKβ − yᵀβ   s.t.  Σα = Σα* = Cν/2,  0 ≤ α, α* ≤ C/n
//! ```
//!
//! is solved by a two-coordinate (SMO) method with second-order working
//! set selection in the style of libsvm's `Solver_NU`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrSpec {
    pub gamma: f64,
    pub nu: f64,
    pub c: f64,
    /// Stop when the maximal KKT violation falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvrSpec {
    fn default() -> Self {
        SvrSpec {
            gamma: 1.0,
            nu: 0.5,
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
        }
    }
}

impl SvrSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidHyperparameter(alloc::format!(
                "gamma {} must be positive",
                self.gamma
            )));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidHyperparameter(alloc::format!(
                "nu {} not in (0, 1]",
                self.nu
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidHyperparameter(alloc::format!(
                "C {} must be positive",
                self.c
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidHyperparameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

pub fn rbf(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::exp(-gamma * d2)
}

/// Raw dual solution over the training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NuSvrSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// Prediction is `Σ (α_i − α*_i) k(x_i, x) + bias`.
    pub bias: f64,
    /// Tube half-width implied by the solution.
    pub epsilon: f64,
    pub violation: f64,
    pub iterations: usize,
}

impl NuSvrSolution {
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, s)| a - s).collect()
    }
}

/// `½ βᵀKβ − yᵀβ` for `β = α − α*`.
pub fn dual_objective(kernel: &[Vec<f64>], y: &[f64], coef: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (i, ci) in coef.iter().enumerate() {
        for (j, cj) in coef.iter().enumerate() {
            quad += ci * cj * kernel[i][j];
        }
    }
    0.5 * quad - y.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter().map(|u| x.iter().map(|v| rbf(gamma, u, v)).collect()).collect()
}

/// Solves the dual on `(x, y)` as given (no centering).
pub fn solve_nusvr(x: &[Vec<f64>], y: &[f64], spec: &SvrSpec) -> Result<NuSvrSolution> {
    spec.validate()?;
    let l = x.len();
    if l < 2 {
        return Err(Error::TooFewRows { needed: 2, got: l });
    }
    if y.len() != l {
        return Err(Error::LengthMismatch {
            actual: y.len(),
            predicted: l,
        });
    }
    let k = kernel_matrix(x, spec.gamma);
    let ub = spec.c / l as f64;
    // variable t < l is α_t (sign +1), t ≥ l is α*_{t−l} (sign −1)
    let n = 2 * l;
    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * k[s % l][t % l];

    let mut a = vec![0.0; n];
    let mut remaining = spec.c * spec.nu / 2.0;
    for i in 0..l {
        let v = remaining.min(ub);
        a[i] = v;
        a[i + l] = v;
        remaining -= v;
    }
    // G = Qa + p with p = (−y, y)
    let mut g: Vec<f64> = (0..n).map(|t| -sign(t) * y[t % l]).collect();
    for s in 0..n {
        if a[s] != 0.0 {
            for t in 0..n {
                g[t] += q(s, t) * a[s];
            }
        }
    }
    let at_upper = |v: f64| v >= ub;
    let at_lower = |v: f64| v <= 0.0;

    let mut iterations = 0;
    let violation = loop {
        // first pick per sign: maximal −y_t G_t among movable-up variables
        let (mut gmaxp, mut gmaxp_idx) = (f64::NEG_INFINITY, None);
        let (mut gmaxn, mut gmaxn_idx) = (f64::NEG_INFINITY, None);
        for t in 0..n {
            if t < l {
                if !at_upper(a[t]) && -g[t] >= gmaxp {
                    gmaxp = -g[t];
                    gmaxp_idx = Some(t);
                }
            } else if !at_lower(a[t]) && g[t] >= gmaxn {
                gmaxn = g[t];
                gmaxn_idx = Some(t);
            }
        }
        let (mut gmaxp2, mut gmaxn2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut best: Option<usize> = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if t < l {
                if at_lower(a[t]) {
                    continue;
                }
                gmaxp2 = gmaxp2.max(g[t]);
                let Some(ip) = gmaxp_idx else { continue };
                let diff = gmaxp + g[t];
                if diff > 0.0 {
                    let quad = q(ip, ip) + q(t, t) - 2.0 * q(ip, t);
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best = Some(t);
                        best_obj = obj;
                    }
                }
            } else {
                if at_upper(a[t]) {
                    continue;
                }
                gmaxn2 = gmaxn2.max(-g[t]);
                let Some(in_) = gmaxn_idx else { continue };
                let diff = gmaxn - g[t];
                if diff > 0.0 {
                    let quad = q(in_, in_) + q(t, t) - 2.0 * q(in_, t);
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best_obj {
                        best = Some(t);
                        best_obj = obj;
                    }
                }
            }
        }
        let violation = (gmaxp + gmaxp2).max(gmaxn + gmaxn2).max(0.0);
        let Some(j) = best.filter(|_| violation >= spec.tolerance) else {
            break violation;
        };
        if iterations >= spec.max_iterations {
            return Err(Error::NotConverged { violation });
        }
        iterations += 1;
        let i = if j < l { gmaxp_idx } else { gmaxn_idx }.expect("paired index exists");

        // same-sign pair: move along a_i + a_j = const
        let (old_i, old_j) = (a[i], a[j]);
        let quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
        let quad = if quad > 0.0 { quad } else { TAU };
        let delta = (g[i] - g[j]) / quad;
        let sum = a[i] + a[j];
        a[i] -= delta;
        a[j] += delta;
        if sum > ub {
            if a[i] > ub {
                a[i] = ub;
                a[j] = sum - ub;
            }
        } else if a[j] < 0.0 {
            a[j] = 0.0;
            a[i] = sum;
        }
        if sum > ub {
            if a[j] > ub {
                a[j] = ub;
                a[i] = sum - ub;
            }
        } else if a[i] < 0.0 {
            a[i] = 0.0;
            a[j] = sum;
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..n {
            g[t] += q(i, t) * di + q(j, t) * dj;
        }
    };

    // offset from free variables, or the midpoint of the feasible interval
    let side = |range: core::ops::Range<usize>| {
        let (mut ubound, mut lbound) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum) = (0usize, 0.0);
        for t in range {
            if at_upper(a[t]) {
                lbound = lbound.max(g[t]);
            } else if at_lower(a[t]) {
                ubound = ubound.min(g[t]);
            } else {
                free += 1;
                sum += g[t];
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ubound + lbound) / 2.0
        }
    };
    let r1 = side(0..l);
    let r2 = side(l..n);
    let rho = (r1 - r2) / 2.0;
    Ok(NuSvrSolution {
        alpha: a[..l].to_vec(),
        alpha_star: a[l..].to_vec(),
        bias: -rho,
        epsilon: -(r1 + r2) / 2.0,
        violation,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub inputs: Vec<String>,
    pub gamma: f64,
    pub nu: f64,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i − α*_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub violation: f64,
}

impl SvrModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .support_vectors
                .iter()
                .zip(&self.dual_coef)
                .map(|(sv, c)| c * rbf(self.gamma, sv, x))
                .sum::<f64>()
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        let m = rows.select_columns(&self.inputs)?;
        Ok(m.rows.iter().map(|r| self.predict_row(r)).collect())
    }
}

/// Fits on `train` with targets centered before solving; the mean is
/// folded back into the bias.
pub fn fit_nusvr(train: &FeatureMatrix, spec: &SvrSpec) -> Result<SvrModel> {
    spec.validate()?;
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let mean = train.targets.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = train.targets.iter().map(|y| y - mean).collect();
    let sol = solve_nusvr(&train.rows, &centered, spec)?;
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for (x, c) in train.rows.iter().zip(sol.coefficients()) {
        if c != 0.0 {
            support_vectors.push(x.clone());
            dual_coef.push(c);
        }
    }
    Ok(SvrModel {
        inputs: train.columns.clone(),
        gamma: spec.gamma,
        nu: spec.nu,
        c: spec.c,
        support_vectors,
        dual_coef,
        bias: sol.bias + mean,
        epsilon: sol.epsilon,
        violation: sol.violation,
    })
}
