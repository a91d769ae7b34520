//! Revenue growth, per-aspect perceptions and the design matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::aspect::{find_aspect, AspectMatch};
use crate::corpus::{Quarter, RevenueSeries};
use crate::{Error, Result};

/// Name of the optional previous-quarter growth column.
pub const LAGGED_GROWTH: &str = "lagged_growth";

/// Quarter-over-quarter fractional revenue growth.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    values: BTreeMap<Quarter, f64>,
}

impl GrowthSeries {
    pub fn from_entries(entries: impl IntoIterator<Item = (Quarter, f64)>) -> Self {
        GrowthSeries {
            values: entries.into_iter().collect(),
        }
    }

    pub fn get(&self, quarter: Quarter) -> Option<f64> {
        self.values.get(&quarter).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Quarter, f64)> + '_ {
        self.values.iter().map(|(&q, &g)| (q, g))
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }

    pub fn quarters(&self) -> Vec<Quarter> {
        self.values.keys().copied().collect()
    }
}

/// `(revenue_q - revenue_{q-1}) / revenue_{q-1}` for every quarter after the first.
pub fn revenue_growth(series: &RevenueSeries) -> Result<GrowthSeries> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let entries: Vec<(Quarter, f64)> = series.iter().collect();
    Ok(GrowthSeries::from_entries(
        entries.windows(2).map(|w| (w[1].0, (w[1].1 - w[0].1) / w[0].1)),
    ))
}

/// Mean compound sentiment of the reviews that mention one aspect in one quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionRecord {
    pub aspect_id: String,
    pub quarter: Quarter,
    pub compound_sum: f64,
    pub review_count: usize,
    pub perception: f64,
}

impl PerceptionRecord {
    /// No reviews referred to the aspect in this quarter.
    pub fn is_empty(&self) -> bool {
        self.review_count == 0
    }
}

pub fn perception(aspect_id: &str, quarter: Quarter, compounds: &[f64]) -> Result<PerceptionRecord> {
    if let Some(&bad) = compounds.iter().find(|c| !(-1.0..=1.0).contains(*c)) {
        return Err(Error::CompoundOutOfRange(bad));
    }
    let compound_sum: f64 = compounds.iter().sum();
    let perception = if compounds.is_empty() {
        0.0
    } else {
        compound_sum / compounds.len() as f64
    };
    Ok(PerceptionRecord {
        aspect_id: aspect_id.to_string(),
        quarter,
        compound_sum,
        review_count: compounds.len(),
        perception,
    })
}

/// Builds one record per `(aspect, quarter)` pair from aspect matches and
/// per-review `(quarter, compound)` scores. Pairs without reviews are
/// present with `review_count == 0`.
pub fn aggregate_perceptions(
    matches: &[AspectMatch],
    scores: &BTreeMap<String, (Quarter, f64)>,
    aspect_ids: &[&str],
    quarters: &[Quarter],
) -> Result<Vec<PerceptionRecord>> {
    let mut buckets: BTreeMap<(&str, Quarter), Vec<f64>> = BTreeMap::new();
    for m in matches {
        let Some(&(quarter, compound)) = scores.get(&m.review_id) else {
            continue;
        };
        buckets
            .entry((m.aspect_id.as_str(), quarter))
            .or_default()
            .push(compound);
    }
    let mut records = Vec::with_capacity(aspect_ids.len() * quarters.len());
    for &aspect in aspect_ids {
        if find_aspect(aspect).is_none() {
            return Err(Error::UnknownAspect(aspect.to_string()));
        }
        for &quarter in quarters {
            let compounds = buckets.get(&(aspect, quarter)).map(Vec::as_slice).unwrap_or(&[]);
            records.push(perception(aspect, quarter, compounds)?);
        }
    }
    Ok(records)
}

/// Quarters x features design matrix with growth targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub quarters: Vec<Quarter>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(quarters: Vec<Quarter>, columns: Vec<String>, rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if quarters.len() != rows.len() || rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                actual: targets.len(),
                predicted: rows.len(),
            });
        }
        if rows.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::LengthMismatch {
                actual: columns.len(),
                predicted: rows.iter().map(Vec::len).find(|&l| l != columns.len()).unwrap_or(0),
            });
        }
        Ok(FeatureMatrix {
            quarters,
            columns,
            rows,
            targets,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// Keeps the named columns in the given order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n.as_ref())
                    .ok_or_else(|| Error::MissingFeature(n.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            quarters: self.quarters.clone(),
            columns: names.iter().map(|n| n.as_ref().to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            targets: self.targets.clone(),
        })
    }

    /// Rows `range` as a new matrix.
    pub fn slice(&self, range: core::ops::Range<usize>) -> FeatureMatrix {
        FeatureMatrix {
            quarters: self.quarters[range.clone()].to_vec(),
            columns: self.columns.clone(),
            rows: self.rows[range.clone()].to_vec(),
            targets: self.targets[range].to_vec(),
        }
    }

    /// Row values keyed by column name.
    pub fn row_map(&self, row: usize) -> BTreeMap<String, f64> {
        self.columns
            .iter()
            .cloned()
            .zip(self.rows[row].iter().copied())
            .collect()
    }

    /// The growth series formed by the targets.
    pub fn target_series(&self) -> GrowthSeries {
        GrowthSeries::from_entries(self.quarters.iter().copied().zip(self.targets.iter().copied()))
    }
}

/// Assembles one row per growth quarter (minus the first when the lag
/// column is on). Missing perception records count as 0.
pub fn assemble<S: AsRef<str>>(
    perceptions: &[PerceptionRecord],
    growth: &GrowthSeries,
    aspects: &[S],
    include_lag: bool,
) -> Result<FeatureMatrix> {
    let mut seen = BTreeSet::new();
    for a in aspects {
        let a = a.as_ref();
        if find_aspect(a).is_none() {
            return Err(Error::UnknownAspect(a.to_string()));
        }
        if !seen.insert(a) {
            return Err(Error::InvalidHyperparameter(alloc::format!(
                "aspect '{a}' listed twice"
            )));
        }
    }
    let lookup: BTreeMap<(&str, Quarter), f64> = perceptions
        .iter()
        .map(|r| ((r.aspect_id.as_str(), r.quarter), r.perception))
        .collect();

    let mut columns: Vec<String> = aspects.iter().map(|a| a.as_ref().to_string()).collect();
    if include_lag {
        columns.push(LAGGED_GROWTH.to_string());
    }
    let mut quarters = Vec::new();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (quarter, target) in growth.iter() {
        let lag = growth.get(quarter.prev());
        if include_lag && lag.is_none() {
            continue;
        }
        let mut row: Vec<f64> = aspects
            .iter()
            .map(|a| lookup.get(&(a.as_ref(), quarter)).copied().unwrap_or(0.0))
            .collect();
        if let Some(lag) = lag.filter(|_| include_lag) {
            row.push(lag);
        }
        quarters.push(quarter);
        rows.push(row);
        targets.push(target);
    }
    FeatureMatrix::new(quarters, columns, rows, targets)
}

/// Train:test proportions for a chronological split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub test: u32,
}

impl SplitRatio {
    pub const TWO_TO_ONE: SplitRatio = SplitRatio { train: 2, test: 1 };

    pub fn new(train: u32, test: u32) -> Result<Self> {
        if train == 0 || test == 0 {
            return Err(Error::InvalidSplit { train, test });
        }
        Ok(SplitRatio { train, test })
    }

    /// Rows going to training out of `n`: `ceil(n * train / (train + test))`,
    /// kept within `1..n` so neither side is empty.
    pub fn train_rows(self, n: usize) -> Result<usize> {
        if self.train == 0 || self.test == 0 {
            return Err(Error::InvalidSplit {
                train: self.train,
                test: self.test,
            });
        }
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, got: n });
        }
        let total = (self.train + self.test) as usize;
        let ceil = (n * self.train as usize).div_ceil(total);
        Ok(ceil.clamp(1, n - 1))
    }
}

/// Earliest rows train, the rest test. No shuffling.
pub fn chronological_split(matrix: &FeatureMatrix, ratio: SplitRatio) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let cut = ratio.train_rows(matrix.n_rows())?;
    Ok((matrix.slice(0..cut), matrix.slice(cut..matrix.n_rows())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    fn revenue(values: &[f64]) -> RevenueSeries {
        let mut quarter = q("2015Q4");
        RevenueSeries::from_entries(values.iter().map(|&v| {
            let this = quarter;
            quarter = quarter.next();
            (this, v)
        }))
        .unwrap()
    }

    pub(crate) const AFTER_SALES_COMPOUNDS: [f64; 12] = [
        0.4215, 0.3612, 0.3182, 0.7092, 0.9196, 0.8876, 0.9681, 0.4091, 0.9702, 0.1027, 0.9715, 0.9829,
    ];

    #[test]
    fn growth_examples() {
        assert_eq!(revenue_growth(&revenue(&[100.0, 100.0])).unwrap().values(), [0.0]);
        let g = revenue_growth(&revenue(&[100.0, 110.0])).unwrap();
        assert!((g.values()[0] - 0.10).abs() < 1e-15);
        assert_eq!(g.quarters(), [q("2016Q1")]);
        assert_eq!(revenue_growth(&revenue(&[200.0, 150.0])).unwrap().values(), [-0.25]);
        assert!(matches!(
            revenue_growth(&revenue(&[100.0])),
            Err(Error::SeriesTooShort { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn after_sales_perception() {
        let record = perception("after_sales_experience", q("2016Q4"), &AFTER_SALES_COMPOUNDS).unwrap();
        assert_eq!(record.review_count, 12);
        assert!((record.perception - 0.66848334).abs() < 1e-8);
        assert!((record.perception - 8.0218 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn perception_edge_cases() {
        assert_eq!(perception("cost_savings", q("2016Q4"), &[0.5]).unwrap().perception, 0.5);
        let empty = perception("cost_savings", q("2016Q4"), &[]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.perception, 0.0);
        assert_eq!(
            perception("cost_savings", q("2016Q4"), &[0.2, 1.5]),
            Err(Error::CompoundOutOfRange(1.5))
        );
    }

    fn growth(values: &[f64]) -> GrowthSeries {
        let mut quarter = q("2016Q1");
        GrowthSeries::from_entries(values.iter().map(|&v| {
            let this = quarter;
            quarter = quarter.next();
            (this, v)
        }))
    }

    #[test]
    fn assemble_shapes() {
        let p = [perception("cost_savings", q("2016Q1"), &[0.4]).unwrap()];
        let m = assemble(&p, &growth(&[0.1, 0.2]), &["cost_savings"], false).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (2, 1));
        assert_eq!(m.targets, [0.1, 0.2]);
        // second quarter has no reviews: zero cell
        assert_eq!(m.rows, [[0.4], [0.0]]);

        let m = assemble(&p, &growth(&[0.1, 0.2, 0.3]), &["cost_savings"], true).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m.columns, ["cost_savings", LAGGED_GROWTH]);
        assert_eq!(m.rows, [[0.0, 0.1], [0.0, 0.2]]);
        assert_eq!(m.quarters, [q("2016Q2"), q("2016Q3")]);

        assert_eq!(
            assemble(&p, &growth(&[0.1]), &["bogus"], false),
            Err(Error::UnknownAspect("bogus".into()))
        );
    }

    #[test]
    fn aggregate_from_matches() {
        let mut scores = BTreeMap::new();
        let mut matches = Vec::new();
        for (i, c) in AFTER_SALES_COMPOUNDS.iter().enumerate() {
            let id = alloc::format!("r{i}");
            scores.insert(id.clone(), (q("2016Q4"), *c));
            matches.push(AspectMatch {
                review_id: id,
                aspect_id: "after_sales_experience".into(),
                phrases: ["support".to_string()].into(),
            });
        }
        let records = aggregate_perceptions(
            &matches,
            &scores,
            &["after_sales_experience", "cost_savings"],
            &[q("2016Q4"), q("2017Q1")],
        )
        .unwrap();
        assert_eq!(records.len(), 4);
        assert!((records[0].perception - 0.66848334).abs() < 1e-8);
        assert!(records[1..].iter().all(|r| r.is_empty() && r.perception == 0.0));
    }

    fn matrix(n: usize) -> FeatureMatrix {
        let mut quarter = q("2015Q4");
        let quarters = (0..n)
            .map(|_| {
                let this = quarter;
                quarter = quarter.next();
                this
            })
            .collect();
        FeatureMatrix::new(
            quarters,
            alloc::vec!["x".into()],
            (0..n).map(|i| alloc::vec![i as f64]).collect(),
            (0..n).map(|i| i as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let (train, test) = chronological_split(&matrix(13), SplitRatio::TWO_TO_ONE).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (9, 4));
        assert_eq!(train.quarters.last().unwrap().to_string(), "2017Q4");
        assert_eq!(test.quarters.first().unwrap().to_string(), "2018Q1");
        assert_eq!(test.quarters.last().unwrap().to_string(), "2018Q4");

        let (train, test) = chronological_split(&matrix(2), SplitRatio::new(1, 1).unwrap()).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (1, 1));
        let (train, test) = chronological_split(&matrix(3), SplitRatio::TWO_TO_ONE).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (2, 1));
        assert!(matches!(
            chronological_split(&matrix(1), SplitRatio::TWO_TO_ONE),
            Err(Error::TooFewRows { .. })
        ));
        assert!(SplitRatio::new(0, 1).is_err());
    }

    proptest! {
        #[test]
        fn constant_perception(c in -1.0f64..=1.0, n in 1usize..50) {
            let r = perception("cost_savings", q("2016Q4"), &alloc::vec![c; n]).unwrap();
            prop_assert!((r.perception - c).abs() < 1e-12);
        }

        #[test]
        fn perception_permutation_invariant(mut cs in proptest::collection::vec(-1.0f64..=1.0, 1..30), seed in any::<u64>()) {
            let a = perception("cost_savings", q("2016Q4"), &cs).unwrap().perception;
            use rand::{seq::SliceRandom, SeedableRng};
            cs.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let b = perception("cost_savings", q("2016Q4"), &cs).unwrap().perception;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn growth_reconstructs_revenue(values in proptest::collection::vec(1.0f64..1e6, 2..30)) {
            let series = revenue(&values);
            let g = revenue_growth(&series).unwrap();
            let levels: Vec<(Quarter, f64)> = series.iter().collect();
            for w in levels.windows(2) {
                let rebuilt = w[0].1 * (1.0 + g.get(w[1].0).unwrap());
                prop_assert!(((rebuilt - w[1].1) / w[1].1).abs() < 1e-12);
            }
        }

        #[test]
        fn split_is_ordered_partition(n in 2usize..60, train in 1u32..5, test in 1u32..5) {
            let m = matrix(n);
            let (a, b) = chronological_split(&m, SplitRatio::new(train, test).unwrap()).unwrap();
            prop_assert!(a.n_rows() >= 1 && b.n_rows() >= 1);
            let mut joined = a.targets.clone();
            joined.extend(&b.targets);
            prop_assert_eq!(joined, m.targets);
        }
    }
}
