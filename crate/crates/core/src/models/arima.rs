//! ARIMA(p, d, q) by conditional sum of squares.
//!
//! On the `d`-times differenced series `w`,
//!
//! ```text
//! w_t = c + Σ φ_i w_{t−i} − Σ θ_j e_{t−j} + e_t
//! ```
//!
//! with pre-sample errors set to zero and the constant `c` included only
//! when `d = 0`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::optim::{minimize, LeastSquaresProblem, LmConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        ArimaOrder { p, d, q }
    }

    fn has_constant(self) -> bool {
        self.d == 0
    }

    fn n_params(self) -> usize {
        usize::from(self.has_constant()) + self.p + self.q
    }
}

impl core::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

/// `d`-th order differences.
pub fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|x| x[1] - x[0]).collect();
    }
    w
}

/// True when all roots of `1 − θ_1 z − … − θ_q z^q` lie outside the unit
/// circle (step-down / Schur–Cohn recursion).
pub fn ma_invertible(theta: &[f64]) -> bool {
    // monic reversed polynomial z^q − θ_1 z^{q−1} − … − θ_q must have all
    // roots strictly inside the unit circle
    let mut a: Vec<f64> = theta.iter().map(|t| -t).collect();
    while let Some(&k) = a.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1).map(|i| (a[i] - k * a[m - 2 - i]) / denom).collect();
        a = next;
    }
    true
}

struct Css<'a> {
    w: &'a [f64],
    order: ArimaOrder,
}

impl Css<'_> {
    fn split<'p>(&self, params: &'p [f64]) -> (f64, &'p [f64], &'p [f64]) {
        let c0 = usize::from(self.order.has_constant());
        let c = if c0 == 1 { params[0] } else { 0.0 };
        (c, &params[c0..c0 + self.order.p], &params[c0 + self.order.p..])
    }

    /// Errors `e_t` for every `t`, zero before `p`.
    fn errors(&self, params: &[f64]) -> Vec<f64> {
        let (c, phi, theta) = self.split(params);
        let p = self.order.p;
        let mut e = vec![0.0; self.w.len()];
        for t in p..self.w.len() {
            let mut v = self.w[t] - c;
            for (i, f) in phi.iter().enumerate() {
                v -= f * self.w[t - 1 - i];
            }
            for (j, th) in theta.iter().enumerate() {
                if t > j {
                    v += th * e[t - 1 - j];
                }
            }
            e[t] = v;
        }
        e
    }
}

impl LeastSquaresProblem for Css<'_> {
    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        self.errors(params)[self.order.p..].to_vec()
    }

    fn jacobian(&self, params: &[f64]) -> Matrix {
        let (_, _, theta) = self.split(params);
        let (p, n) = (self.order.p, self.w.len());
        let k = params.len();
        let c0 = usize::from(self.order.has_constant());
        let e = self.errors(params);
        // de[t][k], zero before p
        let mut de = vec![vec![0.0; k]; n];
        for t in p..n {
            let mut row = vec![0.0; k];
            if c0 == 1 {
                row[0] = -1.0;
            }
            for i in 0..p {
                row[c0 + i] = -self.w[t - 1 - i];
            }
            for j in 0..self.order.q {
                if t > j {
                    row[c0 + p + j] += e[t - 1 - j];
                }
            }
            for (j, th) in theta.iter().enumerate() {
                if t > j {
                    for (r, d) in row.iter_mut().zip(&de[t - 1 - j]) {
                        *r += th * d;
                    }
                }
            }
            de[t] = row;
        }
        Matrix::from_rows(&de[p..])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub constant: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// In-sample errors on the differenced series.
    pub residuals: Vec<f64>,
    /// The level series the model was fitted on.
    pub series: Vec<f64>,
    /// Set when the MA polynomial has a root on or inside the unit circle.
    pub non_invertible_ma: bool,
}

impl ArimaModel {
    /// Builds a model from known coefficients; residuals are recomputed
    /// from `series`.
    pub fn from_parts(order: ArimaOrder, constant: f64, ar: Vec<f64>, ma: Vec<f64>, series: Vec<f64>) -> Result<Self> {
        if ar.len() != order.p || ma.len() != order.q {
            return Err(Error::InvalidHyperparameter(
                "coefficient counts do not match the order".into(),
            ));
        }
        if series.len() <= order.d {
            return Err(Error::SeriesTooShort {
                needed: order.d + 1,
                got: series.len(),
            });
        }
        let w = difference(&series, order.d);
        let css = Css { w: &w, order };
        let mut params = Vec::new();
        if order.has_constant() {
            params.push(constant);
        }
        params.extend_from_slice(&ar);
        params.extend_from_slice(&ma);
        let residuals = if w.len() >= order.p {
            css.errors(&params)
        } else {
            vec![0.0; w.len()]
        };
        Ok(ArimaModel {
            order,
            constant,
            non_invertible_ma: !ma_invertible(&ma),
            ar,
            ma,
            residuals,
            series,
        })
    }

    /// Iterated one-step forecasts with future errors set to zero, mapped
    /// back to levels.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        let d = self.order.d;
        let mut w = difference(&self.series, d);
        let mut e = self.residuals.clone();
        // last value at each differencing order below d
        let mut tails: Vec<f64> = (0..d).map(|k| *difference(&self.series, k).last().unwrap()).collect();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let t = w.len();
            let mut next = self.constant;
            for (i, f) in self.ar.iter().enumerate() {
                if t > i {
                    next += f * w[t - 1 - i];
                }
            }
            for (j, th) in self.ma.iter().enumerate() {
                if t > j {
                    next -= th * e[t - 1 - j];
                }
            }
            w.push(next);
            e.push(0.0);
            let mut level = next;
            for k in (0..d).rev() {
                level += tails[k];
                tails[k] = level;
            }
            out.push(level);
        }
        out
    }
}

/// Fits by minimizing the conditional sum of squares with LM.
pub fn fit_arima(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    let needed = order.d + order.p + order.q + 2;
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { epoch: 0 });
    }
    let w = difference(series, order.d);
    let css = Css { w: &w, order };
    let mut init = vec![0.0; order.n_params()];
    if order.has_constant() {
        init[0] = w.iter().sum::<f64>() / w.len() as f64;
    }
    let config = LmConfig {
        max_iterations: 500,
        ..LmConfig::default()
    };
    let report = minimize(&css, init, 1e-3, &config);
    let residuals = css.errors(&report.params);
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite {
            epoch: report.iterations,
        });
    }
    let (c, phi, theta) = css.split(&report.params);
    Ok(ArimaModel {
        order,
        constant: c,
        ar: phi.to_vec(),
        ma: theta.to_vec(),
        non_invertible_ma: !ma_invertible(theta),
        residuals,
        series: series.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{central_difference_jacobian, jacobian_discrepancy};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub(crate) const TUNING_GRID: [ArimaOrder; 6] = [
        ArimaOrder::new(1, 0, 0),
        ArimaOrder::new(1, 1, 0),
        ArimaOrder::new(2, 1, 0),
        ArimaOrder::new(0, 1, 1),
        ArimaOrder::new(2, 0, 0),
        ArimaOrder::new(3, 0, 0),
    ];

    fn ar1(n: usize, phi: f64, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = phi * x[t - 1] + noise.sample(&mut rng);
        }
        x
    }

    #[test]
    fn recovers_ar1() {
        let model = fit_arima(&ar1(500, 0.6, 0.1, 2024), ArimaOrder::new(1, 0, 0)).unwrap();
        assert!((0.5..=0.7).contains(&model.ar[0]), "phi {}", model.ar[0]);
    }

    #[test]
    fn white_noise_constant_is_sample_mean() {
        let x = ar1(40, 0.0, 1.0, 9);
        let model = fit_arima(&x, ArimaOrder::new(0, 0, 0)).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        for f in model.forecast(3) {
            assert!((f - mean).abs() < 1e-8);
        }
    }

    #[test]
    fn tuning_grid_fits_thirteen_points() {
        let x = [
            0.42, 0.47, 0.55, 0.49, 0.43, 0.45, 0.46, 0.51, 0.45, 0.49, 0.48, 0.47, 0.45,
        ];
        for order in TUNING_GRID {
            let model = fit_arima(&x, order).unwrap();
            assert!(model.residuals.iter().all(|r| r.is_finite()), "{order}");
            assert!(model.forecast(4).iter().all(|f| f.is_finite()));
        }
    }

    #[test]
    fn closed_form_forecasts() {
        let m = ArimaModel::from_parts(ArimaOrder::new(1, 0, 0), 0.0, vec![0.5], vec![], vec![0.3, 1.0]).unwrap();
        assert_eq!(m.forecast(3), [0.5, 0.25, 0.125]);
        let m = ArimaModel::from_parts(ArimaOrder::new(0, 0, 0), 0.7, vec![], vec![], vec![1.0, 2.0]).unwrap();
        assert_eq!(m.forecast(2), [0.7, 0.7]);
        let m = ArimaModel::from_parts(ArimaOrder::new(0, 1, 0), 0.0, vec![], vec![], vec![0.1, 0.4, 0.35]).unwrap();
        assert_eq!(m.forecast(3), [0.35, 0.35, 0.35]);
    }

    #[test]
    fn differencing_is_inverted() {
        let x = [0.1, 0.3, 0.2, 0.5, 0.45, 0.6, 0.55, 0.7, 0.8, 0.75];
        for order in [ArimaOrder::new(1, 1, 0), ArimaOrder::new(1, 2, 0)] {
            let m = fit_arima(&x, order).unwrap();
            let f = m.forecast(2);
            let w = difference(&x, order.d);
            let phi = m.ar[0];
            if order.d == 1 {
                let step = phi * w[w.len() - 1];
                assert!((f[0] - x[x.len() - 1] - step).abs() < 1e-12);
            } else {
                let step = phi * w[w.len() - 1];
                let d1 = x[x.len() - 1] - x[x.len() - 2];
                assert!((f[0] - (x[x.len() - 1] + d1 + step)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let x = ar1(30, 0.4, 0.2, 5);
        for order in [ArimaOrder::new(2, 0, 1), ArimaOrder::new(1, 1, 2)] {
            let w = difference(&x, order.d);
            let css = Css { w: &w, order };
            let p: Vec<f64> = (0..order.n_params()).map(|i| 0.1 + 0.15 * i as f64).collect();
            let fd = central_difference_jacobian(&css, &p, 1e-6);
            assert!(jacobian_discrepancy(&css.jacobian(&p), &fd) < 1e-6);
        }
    }

    #[test]
    fn invertibility_check() {
        assert!(ma_invertible(&[]));
        assert!(ma_invertible(&[0.5]));
        assert!(!ma_invertible(&[1.5]));
        assert!(!ma_invertible(&[1.0]));
        // 1 − 0.5z − 0.3z²: roots ≈ 1.17, −2.84
        assert!(ma_invertible(&[0.5, 0.3]));
        // 1 − 1.5z + 0.5z² = (1 − z)(1 − 0.5z)
        assert!(!ma_invertible(&[1.5, -0.5]));
        // (1 − 2z)(1 + 0.1z) = 1 − 1.9z − 0.2z²
        assert!(!ma_invertible(&[1.9, 0.2]));
    }

    #[test]
    fn too_short() {
        assert_eq!(
            fit_arima(&[0.1, 0.2, 0.3], ArimaOrder::new(1, 1, 0)),
            Err(Error::SeriesTooShort { needed: 4, got: 3 })
        );
    }
}
