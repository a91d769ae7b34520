//! Ordinary least squares with optional backward stepwise elimination.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::linalg::{Matrix, Qr};
use crate::stats::t_two_sided_p;
use crate::{Error, Result};

/// Relative threshold on `|R_kk| / ‖x_k‖` below which a column counts as
/// collinear with the columns before it.
const COLLINEARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Selection {
    All,
    /// Drop the feature with the largest p-value while it exceeds `threshold`.
    BackwardStepwise {
        threshold: f64,
    },
}

impl Default for Selection {
    fn default() -> Self {
        Selection::BackwardStepwise { threshold: 0.3 }
    }
}

/// `y = intercept + Σ coefficient · feature`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    /// Evaluation order of the coefficients.
    pub selected_features: Vec<String>,
    /// Two-sided t-test p-values, when the fit had residual degrees of freedom.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub p_values: BTreeMap<String, f64>,
}

impl LinearModel {
    /// A model from explicit coefficients, evaluated in the given order.
    pub fn from_coefficients<S: AsRef<str>>(intercept: f64, coefficients: &[(S, f64)]) -> Self {
        LinearModel {
            intercept,
            coefficients: coefficients.iter().map(|(k, v)| (k.as_ref().to_string(), *v)).collect(),
            selected_features: coefficients.iter().map(|(k, _)| k.as_ref().to_string()).collect(),
            p_values: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.coefficients.keys() {
            if !self.selected_features.contains(key) {
                return Err(Error::InvalidHyperparameter(alloc::format!(
                    "coefficient '{key}' is not a selected feature"
                )));
            }
        }
        Ok(())
    }

    /// `intercept + Σ coef · feature` over `selected_features` in order.
    pub fn predict(&self, features: &BTreeMap<String, f64>) -> Result<f64> {
        let mut y = self.intercept;
        for name in &self.selected_features {
            let x = features.get(name).ok_or_else(|| Error::MissingFeature(name.clone()))?;
            y += self.coefficients.get(name).copied().unwrap_or(0.0) * x;
        }
        Ok(y)
    }

    pub fn predict_matrix(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..rows.n_rows()).map(|r| self.predict(&rows.row_map(r))).collect()
    }
}

/// Free function form of [`LinearModel::predict`].
pub fn predict_lr(model: &LinearModel, features: &BTreeMap<String, f64>) -> Result<f64> {
    model.predict(features)
}

struct OlsFit {
    intercept: f64,
    coefficients: Vec<f64>,
    p_values: Option<Vec<f64>>,
}

fn design(train: &FeatureMatrix, cols: &[usize]) -> Matrix {
    let rows: Vec<Vec<f64>> = train
        .rows
        .iter()
        .map(|r| core::iter::once(1.0).chain(cols.iter().map(|&c| r[c])).collect())
        .collect();
    if rows.is_empty() {
        return Matrix::zeros(0, cols.len() + 1);
    }
    Matrix::from_rows(&rows)
}

/// Column indices (into `cols`) that are collinear with earlier columns or the intercept.
fn collinear(train: &FeatureMatrix, cols: &[usize]) -> Vec<usize> {
    let qr = Qr::new(&design(train, cols));
    qr.dependent_columns(COLLINEARITY_TOL)
        .into_iter()
        .filter(|&k| k > 0)
        .map(|k| k - 1)
        .collect()
}

fn ols(train: &FeatureMatrix, cols: &[usize]) -> Result<OlsFit> {
    let n = train.n_rows();
    let k = cols.len() + 1;
    if n < k {
        return Err(Error::TooFewRows { needed: k, got: n });
    }
    let x = design(train, cols);
    let qr = Qr::new(&x);
    let dependent: Vec<String> = qr
        .dependent_columns(COLLINEARITY_TOL)
        .into_iter()
        .map(|c| {
            if c == 0 {
                "intercept".to_string()
            } else {
                train.columns[cols[c - 1]].clone()
            }
        })
        .collect();
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }
    let beta = qr.solve(&train.targets);
    let df = n - k;
    let p_values = (df > 0).then(|| {
        let fitted = x.mul_vec(&beta);
        let rss: f64 = fitted.iter().zip(&train.targets).map(|(f, y)| (y - f) * (y - f)).sum();
        let sigma2 = rss / df as f64;
        qr.inverse_gram_diagonal()
            .iter()
            .zip(&beta)
            .skip(1)
            .map(|(d, b)| {
                let se = libm::sqrt(sigma2 * d);
                if se == 0.0 {
                    if *b == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    t_two_sided_p(b / se, df as f64)
                }
            })
            .collect()
    });
    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        p_values,
    })
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / libm::sqrt(sxx * syy)
    }
}

/// Keeps the `keep` columns most correlated (in absolute value) with the target.
fn prescreen(train: &FeatureMatrix, cols: &mut Vec<usize>, keep: usize) {
    let mut scored: Vec<(usize, f64)> = cols
        .iter()
        .map(|&c| (c, correlation(&train.column(c), &train.targets).abs()))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(keep);
    let mut kept: Vec<usize> = scored.into_iter().map(|(c, _)| c).collect();
    kept.sort_unstable();
    *cols = kept;
}

fn into_model(train: &FeatureMatrix, cols: &[usize], fit: OlsFit) -> LinearModel {
    let names: Vec<String> = cols.iter().map(|&c| train.columns[c].clone()).collect();
    let p_values = fit
        .p_values
        .map(|ps| names.iter().cloned().zip(ps).collect())
        .unwrap_or_default();
    LinearModel {
        intercept: fit.intercept,
        coefficients: names.iter().cloned().zip(fit.coefficients).collect(),
        selected_features: names,
        p_values,
    }
}

/// Fits `y = a + Σ b_j x_j` by Householder QR.
///
/// With [`Selection::BackwardStepwise`], candidates are first trimmed to
/// what the row count supports (keeping at least one residual degree of
/// freedom, ranked by |correlation| with the target), collinear columns
/// are dropped, then the least significant feature is removed while its
/// p-value exceeds the threshold.
pub fn fit_lr(train: &FeatureMatrix, selection: Selection) -> Result<LinearModel> {
    let mut cols: Vec<usize> = (0..train.n_cols()).collect();
    match selection {
        Selection::All => {
            let fit = ols(train, &cols)?;
            Ok(into_model(train, &cols, fit))
        }
        Selection::BackwardStepwise { threshold } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::InvalidHyperparameter(alloc::format!(
                    "stepwise threshold {threshold} not in [0, 1]"
                )));
            }
            let n = train.n_rows();
            if n < 2 {
                return Err(Error::TooFewRows { needed: 2, got: n });
            }
            // k features + intercept with at least one residual degree of freedom
            let capacity = n.saturating_sub(2);
            if cols.len() > capacity {
                prescreen(train, &mut cols, capacity);
            }
            loop {
                let dependent = collinear(train, &cols);
                if dependent.is_empty() {
                    break;
                }
                let drop: Vec<usize> = dependent.iter().map(|&i| cols[i]).collect();
                cols.retain(|c| !drop.contains(c));
            }
            loop {
                let fit = ols(train, &cols)?;
                let worst = fit.p_values.as_ref().and_then(|ps| {
                    ps.iter()
                        .enumerate()
                        .filter(|(_, p)| **p > threshold || p.is_nan())
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, _)| i)
                });
                match worst {
                    Some(i) => {
                        cols.remove(i);
                    }
                    None => return Ok(into_model(train, &cols, fit)),
                }
            }
        }
    }
}
