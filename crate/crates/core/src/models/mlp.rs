//! One-hidden-layer sigmoid network trained by Levenberg–Marquardt with
//! validation early stopping.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::linalg::Matrix;
use crate::optim::{half_sse, lm_step, LeastSquaresProblem, LmConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpSpec {
    pub hidden: usize,
    pub max_epochs: usize,
    pub lambda0: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            hidden: 10,
            max_epochs: 100,
            lambda0: 1e-3,
            patience: 6,
        }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidHyperparameter("hidden units must be at least 1".into()));
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidHyperparameter("lambda0 must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidHyperparameter("patience must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn n_params(inputs: usize, hidden: usize) -> usize {
    hidden * inputs + 2 * hidden + 1
}

/// Network output for parameters laid out as
/// `[W (hidden x inputs, row-major), b_hidden, v, c]`.
fn forward(params: &[f64], inputs: usize, hidden: usize, x: &[f64], h: &mut [f64]) -> f64 {
    let (w, rest) = params.split_at(hidden * inputs);
    let (b, rest) = rest.split_at(hidden);
    let (v, c) = rest.split_at(hidden);
    let mut s = c[0];
    for j in 0..hidden {
        let a: f64 = b[j]
            + w[j * inputs..(j + 1) * inputs]
                .iter()
                .zip(x)
                .map(|(w, x)| w * x)
                .sum::<f64>();
        h[j] = sigmoid(a);
        s += v[j] * h[j];
    }
    sigmoid(s)
}

/// Residuals `prediction − target` of a fixed-size network over a sample.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    pub inputs: usize,
    pub hidden: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl MlpProblem {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, hidden: usize) -> Self {
        let inputs = x.first().map_or(0, Vec::len);
        MlpProblem { inputs, hidden, x, y }
    }

    pub fn n_params(&self) -> usize {
        n_params(self.inputs, self.hidden)
    }
}

impl LeastSquaresProblem for MlpProblem {
    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        let mut h = alloc::vec![0.0; self.hidden];
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| forward(params, self.inputs, self.hidden, x, &mut h) - y)
            .collect()
    }

    fn jacobian(&self, params: &[f64]) -> Matrix {
        let (d, hn) = (self.inputs, self.hidden);
        let v = &params[hn * d + hn..hn * d + 2 * hn];
        let mut jac = Matrix::zeros(self.x.len(), self.n_params());
        let mut h = alloc::vec![0.0; hn];
        for (r, x) in self.x.iter().enumerate() {
            let o = forward(params, d, hn, x, &mut h);
            let go = o * (1.0 - o);
            let row = jac.row_mut(r);
            for j in 0..hn {
                let gh = go * v[j] * h[j] * (1.0 - h[j]);
                for i in 0..d {
                    row[j * d + i] = gh * x[i];
                }
                row[hn * d + j] = gh;
                row[hn * d + hn + j] = go * h[j];
            }
            row[hn * d + 2 * hn] = go;
        }
        jac
    }
}

/// Row indices of the seeded train / validation / test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl MlpSplit {
    /// Shuffled 70/15/15 with at least one row in validation and test.
    pub fn seeded(n: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewRows { needed: 3, got: n });
        }
        let held = ((0.15 * n as f64) + 0.5) as usize;
        let held = held.max(1);
        if n < 2 * held + 1 {
            return Err(Error::TooFewRows {
                needed: 2 * held + 1,
                got: n,
            });
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        let n_train = n - 2 * held;
        Ok(MlpSplit {
            train: idx[..n_train].to_vec(),
            validation: idx[n_train..n_train + held].to_vec(),
            test: idx[n_train + held..].to_vec(),
        })
    }
}

/// Half sum of squared errors on each partition after an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_error: f64,
    pub validation_error: f64,
    pub test_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub inputs: Vec<String>,
    pub hidden: usize,
    /// `[W (hidden x inputs, row-major), b_hidden, v, c]`
    pub params: Vec<f64>,
    pub best_epoch: usize,
    pub split: MlpSplit,
    pub trace: Vec<EpochRecord>,
}

impl MlpModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut h = alloc::vec![0.0; self.hidden];
        forward(&self.params, self.inputs.len(), self.hidden, x, &mut h)
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        let m = rows.select_columns(&self.inputs)?;
        Ok(m.rows.iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != n_params(self.inputs.len(), self.hidden) {
            return Err(Error::InvalidHyperparameter(
                "parameter count does not match layer sizes".into(),
            ));
        }
        Ok(())
    }
}

fn subset(train: &FeatureMatrix, idx: &[usize], hidden: usize) -> MlpProblem {
    MlpProblem {
        inputs: train.n_cols(),
        hidden,
        x: idx.iter().map(|&i| train.rows[i].clone()).collect(),
        y: idx.iter().map(|&i| train.targets[i]).collect(),
    }
}

/// Trains on a seeded 70% of `train`, keeping the weights with the lowest
/// validation error. One epoch is one accepted LM step; training stops
/// after `patience` epochs without validation improvement, at
/// `max_epochs`, or when the damping saturates.
pub fn fit_mlp(train: &FeatureMatrix, spec: &MlpSpec, seed: u64) -> Result<MlpModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = MlpSplit::seeded(train.n_rows(), &mut rng)?;
    let fit_set = subset(train, &split.train, spec.hidden);
    let val_set = subset(train, &split.validation, spec.hidden);
    let test_set = subset(train, &split.test, spec.hidden);

    let mut params: Vec<f64> = (0..fit_set.n_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
    let record = |epoch: usize, p: &[f64]| EpochRecord {
        epoch,
        train_error: half_sse(&fit_set.residuals(p)),
        validation_error: half_sse(&val_set.residuals(p)),
        test_error: half_sse(&test_set.residuals(p)),
    };
    let mut trace = alloc::vec![record(0, &params)];
    let mut best = (params.clone(), trace[0].validation_error, 0usize);
    let config = LmConfig::default();
    let mut lambda = spec.lambda0;
    let mut stale = 0;

    'epochs: for epoch in 1..=spec.max_epochs {
        let step = loop {
            match lm_step(&fit_set, &params, lambda, &config) {
                Ok(s) if s.accepted => break s,
                Ok(s) => lambda = s.lambda,
                Err(Error::Stalled { .. }) => break 'epochs,
                Err(e) => return Err(e),
            }
        };
        params = step.params;
        lambda = step.lambda;
        let rec = record(epoch, &params);
        if !rec.train_error.is_finite() || !rec.validation_error.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        trace.push(rec);
        if rec.validation_error < best.1 {
            best = (params.clone(), rec.validation_error, epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= spec.patience {
                break;
            }
        }
        if rec.train_error == 0.0 {
            break;
        }
    }

    Ok(MlpModel {
        inputs: train.columns.clone(),
        hidden: spec.hidden,
        params: best.0,
        best_epoch: best.2,
        split,
        trace,
    })
}
