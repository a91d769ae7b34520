//! Forecast error metrics and chronological backtests.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Quarter;
use crate::features::{chronological_split, FeatureMatrix, SplitRatio};
use crate::models::{fit, ForecasterSpec};
use crate::{Error, Result};

fn check(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (p - a) * (p - a)).sum();
    Ok(sse / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    mse(actual, predicted).map(libm::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TheilVariant {
    /// `rmse / (sqrt(mean a²) + sqrt(mean p²))`, bounded in `[0, 1]`.
    U1,
    /// Error relative to the no-change forecast.
    #[default]
    U2,
}

/// Theil's U. For `U2`, `history` is the observation preceding
/// `actual[0]`; without it the first period has no naive forecast and is
/// skipped.
pub fn theils_u(actual: &[f64], predicted: &[f64], variant: TheilVariant, history: Option<f64>) -> Result<f64> {
    check(actual, predicted)?;
    let n = actual.len() as f64;
    let (num, den) = match variant {
        TheilVariant::U1 => {
            let num = libm::sqrt(mse(actual, predicted)?);
            let ma = libm::sqrt(actual.iter().map(|a| a * a).sum::<f64>() / n);
            let mp = libm::sqrt(predicted.iter().map(|p| p * p).sum::<f64>() / n);
            (num, ma + mp)
        }
        TheilVariant::U2 => {
            let start = usize::from(history.is_none());
            if actual.len() <= start {
                return Err(Error::UndefinedTheilU);
            }
            let prev = |t: usize| if t == 0 { history.unwrap_or(0.0) } else { actual[t - 1] };
            let mut num = 0.0;
            let mut den = 0.0;
            for t in start..actual.len() {
                num += (predicted[t] - actual[t]) * (predicted[t] - actual[t]);
                den += (actual[t] - prev(t)) * (actual[t] - prev(t));
            }
            (libm::sqrt(num), libm::sqrt(den))
        }
    };
    if den == 0.0 {
        return Err(Error::UndefinedTheilU);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Mse,
    Rmse,
    TheilsU,
}

impl Metric {
    pub fn score(self, actual: &[f64], predicted: &[f64], history: Option<f64>) -> Result<f64> {
        match self {
            Metric::Mse => mse(actual, predicted),
            Metric::Rmse => rmse(actual, predicted),
            Metric::TheilsU => theils_u(actual, predicted, TheilVariant::U2, history),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub quarter: Quarter,
    pub actual: f64,
    pub predicted: f64,
}

/// One model's out-of-sample performance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub mse: f64,
    pub rmse: f64,
    pub theils_u: f64,
    pub points: Vec<ForecastPoint>,
}

impl EvalRow {
    /// Scores predictions; U2 uses `history` as the naive forecast for the
    /// first test period.
    pub fn from_points(model: impl Into<String>, points: Vec<ForecastPoint>, history: Option<f64>) -> Result<Self> {
        let actual: Vec<f64> = points.iter().map(|p| p.actual).collect();
        let predicted: Vec<f64> = points.iter().map(|p| p.predicted).collect();
        let mse = mse(&actual, &predicted)?;
        Ok(EvalRow {
            model: model.into(),
            mse,
            rmse: libm::sqrt(mse),
            theils_u: theils_u(&actual, &predicted, TheilVariant::U2, history)?,
            points,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// Fits `spec` on the earliest rows and scores it on the rest. Errors
/// carry `label`.
pub fn backtest(label: &str, spec: &ForecasterSpec, data: &FeatureMatrix, ratio: SplitRatio) -> Result<EvalRow> {
    let run = || {
        let (train, test) = chronological_split(data, ratio)?;
        let model = fit(spec, &train)?;
        let predicted = model.predict(&test)?;
        let points = test
            .quarters
            .iter()
            .zip(&test.targets)
            .zip(predicted)
            .map(|((&quarter, &actual), predicted)| ForecastPoint {
                quarter,
                actual,
                predicted,
            })
            .collect();
        EvalRow::from_points(label, points, train.targets.last().copied())
    };
    run().map_err(|e| e.labeled(label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!((mse(&[0.1, 0.2], &[0.2, 0.4]).unwrap() - 0.025).abs() < 1e-15);
        assert_eq!(mse(&[], &[]), Err(Error::EmptyInput));
        assert_eq!(
            mse(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch {
                actual: 1,
                predicted: 2
            })
        );
    }

    #[test]
    fn rmse_of_reported_mse() {
        assert!((libm::sqrt(0.000143942) - 0.011997583).abs() < 1e-9);
        assert!((libm::sqrt(0.000117719) - 0.010849839).abs() < 1e-9);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn theil_hand_example() {
        // numerator sqrt(0.25·3) = 0.8660254037844386
        // denominator sqrt(0.25 + 1 + 4) = 2.29128784747792
        let u = theils_u(&[1.0, 2.0, 4.0], &[1.5, 2.5, 3.5], TheilVariant::U2, Some(0.5)).unwrap();
        assert!((u - 0.3779644730092272).abs() < 1e-15);
        // without history: sqrt(0.5) / sqrt(5)
        let u = theils_u(&[1.0, 2.0, 4.0], &[1.5, 2.5, 3.5], TheilVariant::U2, None).unwrap();
        assert!((u - 0.31622776601683794).abs() < 1e-15);
    }

    #[test]
    fn theil_reference_cases() {
        let a = [0.3, 0.5, 0.2, 0.6];
        let naive = [0.1, 0.3, 0.5, 0.2];
        assert!((theils_u(&a, &naive, TheilVariant::U2, Some(0.1)).unwrap() - 1.0).abs() < 1e-12);
        for v in [TheilVariant::U1, TheilVariant::U2] {
            assert_eq!(theils_u(&a, &a, v, Some(0.1)).unwrap(), 0.0);
        }
        assert_eq!(
            theils_u(&[0.2, 0.2], &[0.1, 0.3], TheilVariant::U2, Some(0.2)),
            Err(Error::UndefinedTheilU)
        );
        assert_eq!(
            theils_u(&[0.0], &[0.0], TheilVariant::U1, None),
            Err(Error::UndefinedTheilU)
        );
        assert_eq!(
            theils_u(&[0.4], &[0.1], TheilVariant::U2, None),
            Err(Error::UndefinedTheilU)
        );
    }

    #[test]
    fn u2_is_order_sensitive_mse_is_not() {
        let a = [0.1, 0.4, 0.2, 0.7];
        let p = [0.15, 0.35, 0.3, 0.6];
        let ra = [0.7, 0.2, 0.4, 0.1];
        let rp = [0.6, 0.3, 0.35, 0.15];
        assert!((mse(&a, &p).unwrap() - mse(&ra, &rp).unwrap()).abs() < 1e-15);
        let u = theils_u(&a, &p, TheilVariant::U2, None).unwrap();
        let ru = theils_u(&ra, &rp, TheilVariant::U2, None).unwrap();
        assert!((u - ru).abs() > 1e-3);
    }

    proptest! {
        #[test]
        fn rmse_is_root_mse(pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..40)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert_eq!(rmse(&a, &p).unwrap(), libm::sqrt(mse(&a, &p).unwrap()));
        }

        #[test]
        fn scale_consistency(
            pairs in prop::collection::vec((0.1f64..2.0, 0.1f64..2.0), 3..20),
            k in 0.01f64..100.0,
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ka: Vec<f64> = a.iter().map(|v| v * k).collect();
            let kp: Vec<f64> = p.iter().map(|v| v * k).collect();
            let r = rmse(&a, &p).unwrap();
            prop_assert!((rmse(&ka, &kp).unwrap() - k * r).abs() <= 1e-9 * (1.0 + k * r));
            for v in [TheilVariant::U1, TheilVariant::U2] {
                if let (Ok(u), Ok(ku)) = (theils_u(&a, &p, v, Some(1.0)), theils_u(&ka, &kp, v, Some(k))) {
                    prop_assert!((u - ku).abs() <= 1e-9 * (1.0 + u));
                }
            }
        }
    }
}
