//! Forecasters: linear regression, an LM-trained perceptron, nu-SVR and
//! ARIMA, behind one spec / fitted-model interface.

pub mod arima;
pub mod linear;
pub mod mlp;
pub mod svr;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use arima::{fit_arima, ArimaModel, ArimaOrder};
pub use linear::{fit_lr, predict_lr, LinearModel, Selection};
pub use mlp::{fit_mlp, MlpModel, MlpSpec};
pub use svr::{fit_nusvr, SvrModel, SvrSpec};

use crate::features::{chronological_split, FeatureMatrix, SplitRatio};
use crate::metrics::Metric;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Linear {
        #[serde(default)]
        selection: Selection,
    },
    Mlp(MlpSpec),
    Svr(SvrSpec),
    Arima(ArimaOrder),
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear",
            ModelSpec::Mlp(_) => "mlp",
            ModelSpec::Svr(_) => "svr",
            ModelSpec::Arima(_) => "arima",
        }
    }

    /// ARIMA reads only the target series.
    pub fn uses_features(&self) -> bool {
        !matches!(self, ModelSpec::Arima(_))
    }
}

/// A model family with hyperparameters and the seed for any randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterSpec {
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ForecasterSpec {
    pub fn new(model: ModelSpec, seed: u64) -> Self {
        ForecasterSpec { model, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.model {
            ModelSpec::Linear {
                selection: Selection::BackwardStepwise { threshold },
            } if !(0.0..=1.0).contains(threshold) => Err(Error::InvalidHyperparameter(alloc::format!(
                "stepwise threshold {threshold} not in [0, 1]"
            ))),
            ModelSpec::Mlp(s) => s.validate(),
            ModelSpec::Svr(s) => s.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Linear(LinearModel),
    Mlp(MlpModel),
    Svr(SvrModel),
    Arima(ArimaModel),
}

impl FittedModel {
    /// One prediction per row. ARIMA ignores the features and forecasts
    /// `rows.n_rows()` periods past the end of its training series.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Linear(m) => m.predict_matrix(rows),
            FittedModel::Mlp(m) => m.predict(rows),
            FittedModel::Svr(m) => m.predict(rows),
            FittedModel::Arima(m) => Ok(m.forecast(rows.n_rows())),
        }
    }
}

pub fn fit(spec: &ForecasterSpec, train: &FeatureMatrix) -> Result<FittedModel> {
    spec.validate()?;
    Ok(match &spec.model {
        ModelSpec::Linear { selection } => FittedModel::Linear(fit_lr(train, *selection)?),
        ModelSpec::Mlp(s) => FittedModel::Mlp(fit_mlp(train, s, spec.seed)?),
        ModelSpec::Svr(s) => FittedModel::Svr(fit_nusvr(train, s)?),
        ModelSpec::Arima(order) => FittedModel::Arima(fit_arima(&train.targets, *order)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    /// Position in the input list.
    pub index: usize,
    pub spec: ForecasterSpec,
    pub score: Result<f64>,
}

/// Fits each spec on the earlier part of `data` and scores it on the
/// later part. Entries are ranked by ascending score; ties keep input
/// order and failures rank last.
pub fn grid_search(
    specs: &[ForecasterSpec],
    data: &FeatureMatrix,
    holdout: SplitRatio,
    metric: Metric,
) -> Result<Vec<GridEntry>> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (train, test) = chronological_split(data, holdout)?;
    let history = train.targets.last().copied();
    let mut entries: Vec<GridEntry> = specs
        .iter()
        .enumerate()
        .map(|(index, spec)| {
            let score = fit(spec, &train)
                .and_then(|m| m.predict(&test))
                .and_then(|p| metric.score(&test.targets, &p, history))
                .and_then(|s| {
                    if s.is_finite() {
                        Ok(s)
                    } else {
                        Err(Error::NonFinite { epoch: 0 })
                    }
                });
            GridEntry {
                index,
                spec: spec.clone(),
                score,
            }
        })
        .collect();
    entries.sort_by(|a, b| match (&a.score, &b.score) {
        (Ok(x), Ok(y)) => x.total_cmp(y),
        (Ok(_), Err(_)) => core::cmp::Ordering::Less,
        (Err(_), Ok(_)) => core::cmp::Ordering::Greater,
        (Err(_), Err(_)) => core::cmp::Ordering::Equal,
    });
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Quarter;
    use alloc::string::ToString;
    use alloc::vec;

    fn data() -> FeatureMatrix {
        let mut q = Quarter::new(2015, 4).unwrap();
        let mut quarters = vec![];
        let mut rows = vec![];
        let mut targets = vec![];
        for i in 0..13 {
            quarters.push(q);
            q = q.next();
            let a = libm::sin(i as f64 * 0.8) * 0.3 + 0.5;
            rows.push(vec![a, libm::cos(i as f64) * 0.2]);
            targets.push(0.1 + 0.3 * a);
        }
        FeatureMatrix::new(quarters, vec!["a".to_string(), "b".to_string()], rows, targets).unwrap()
    }

    fn svr(gamma: f64) -> ForecasterSpec {
        ForecasterSpec::new(
            ModelSpec::Svr(SvrSpec {
                gamma,
                ..SvrSpec::default()
            }),
            0,
        )
    }

    #[test]
    fn gamma_grid_ranks_four() {
        let specs: Vec<_> = [0.01, 0.1, 1.0, 5.0].into_iter().map(svr).collect();
        let ranked = grid_search(&specs, &data(), SplitRatio::TWO_TO_ONE, Metric::Mse).unwrap();
        assert_eq!(ranked.len(), 4);
        let scores: Vec<f64> = ranked.iter().map(|e| *e.score.as_ref().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn single_and_tied_specs() {
        let ranked = grid_search(&[svr(1.0)], &data(), SplitRatio::TWO_TO_ONE, Metric::Mse).unwrap();
        assert_eq!(ranked[0].index, 0);
        let ranked = grid_search(&[svr(1.0), svr(1.0)], &data(), SplitRatio::TWO_TO_ONE, Metric::Mse).unwrap();
        assert_eq!([ranked[0].index, ranked[1].index], [0, 1]);
        assert!(grid_search(&[], &data(), SplitRatio::TWO_TO_ONE, Metric::Mse).is_err());
    }

    #[test]
    fn failures_rank_last() {
        let bad = ForecasterSpec::new(ModelSpec::Arima(ArimaOrder::new(9, 0, 0)), 0);
        let ranked = grid_search(&[bad, svr(1.0)], &data(), SplitRatio::TWO_TO_ONE, Metric::Rmse).unwrap();
        assert_eq!(ranked[0].index, 1);
        assert!(matches!(ranked[1].score, Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn fitted_models_round_trip_through_serde_values() {
        let train = data();
        let specs = [
            ForecasterSpec::new(
                ModelSpec::Linear {
                    selection: Selection::All,
                },
                0,
            ),
            ForecasterSpec::new(ModelSpec::Mlp(MlpSpec::default()), 3),
            svr(5.0),
            ForecasterSpec::new(ModelSpec::Arima(ArimaOrder::new(1, 0, 0)), 0),
        ];
        for spec in &specs {
            let model = fit(spec, &train).unwrap();
            let again = fit(spec, &train).unwrap();
            assert_eq!(model, again);
            assert_eq!(model.predict(&train).unwrap().len(), train.n_rows());
        }
    }
}
