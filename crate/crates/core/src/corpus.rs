//! Reviews, calendar quarters and revenue series.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A calendar quarter, written `YYYYQn`.
///
/// Ordering is lexicographic on `(year, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    index: u8,
}

impl Quarter {
    pub fn new(year: i32, index: u32) -> Result<Self> {
        if !(1..=4).contains(&index) {
            return Err(Error::InvalidQuarterIndex(index));
        }
        Ok(Quarter {
            year,
            index: index as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    /// Quarter number within the year, 1..=4.
    pub fn index(self) -> u32 {
        u32::from(self.index)
    }

    pub fn next(self) -> Quarter {
        if self.index == 4 {
            Quarter {
                year: self.year + 1,
                index: 1,
            }
        } else {
            Quarter {
                year: self.year,
                index: self.index + 1,
            }
        }
    }

    pub fn prev(self) -> Quarter {
        if self.index == 1 {
            Quarter {
                year: self.year - 1,
                index: 4,
            }
        } else {
            Quarter {
                year: self.year,
                index: self.index - 1,
            }
        }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.index)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let malformed = || Error::MalformedQuarter(s.to_string());
        let (year, index) = s.split_once(['Q', 'q']).ok_or_else(malformed)?;
        if year.is_empty() || index.is_empty() {
            return Err(malformed());
        }
        let year: i32 = year.parse().map_err(|_| malformed())?;
        let index: u32 = index.parse().map_err(|_| malformed())?;
        Quarter::new(year, index)
    }
}

impl Serialize for Quarter {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One customer review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub quarter: Quarter,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Review {
    /// Builds a review, rejecting text that is empty after trimming.
    pub fn new(
        id: impl Into<String>,
        quarter: Quarter,
        text: impl Into<String>,
        source: Option<String>,
    ) -> Result<Self> {
        let review = Review {
            id: id.into(),
            quarter,
            text: text.into(),
            source,
        };
        review.validate()?;
        Ok(review)
    }

    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::EmptyText(self.id.clone()));
        }
        Ok(())
    }
}

/// Checks every review and id uniqueness across the set.
pub fn validate_reviews(reviews: &[Review]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for review in reviews {
        review.validate()?;
        if !seen.insert(review.id.as_str()) {
            return Err(Error::DuplicateId(review.id.clone()));
        }
    }
    Ok(())
}

/// Partitions reviews by quarter, keeping input order inside each group.
pub fn group_by_quarter(reviews: &[Review]) -> BTreeMap<Quarter, Vec<&Review>> {
    let mut groups: BTreeMap<Quarter, Vec<&Review>> = BTreeMap::new();
    for review in reviews {
        groups.entry(review.quarter).or_default().push(review);
    }
    groups
}

/// Quarterly revenue in millions USD over a contiguous run of quarters.
#[derive(Debug, Clone, PartialEq)]
pub struct RevenueSeries {
    values: BTreeMap<Quarter, f64>,
}

impl RevenueSeries {
    /// Accepts entries in any order; rejects gaps, duplicates and
    /// non-positive values.
    pub fn from_entries(entries: impl IntoIterator<Item = (Quarter, f64)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (quarter, value) in entries {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveRevenue { quarter, value });
            }
            if values.insert(quarter, value).is_some() {
                return Err(Error::DuplicateQuarter(quarter));
            }
        }
        let mut prev: Option<Quarter> = None;
        for &q in values.keys() {
            if let Some(p) = prev {
                if p.next() != q {
                    return Err(Error::MissingQuarter(p.next()));
                }
            }
            prev = Some(q);
        }
        Ok(RevenueSeries { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, quarter: Quarter) -> Option<f64> {
        self.values.get(&quarter).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Quarter, f64)> + '_ {
        self.values.iter().map(|(&q, &v)| (q, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_formats_quarters() {
        assert_eq!(q("2016Q4"), Quarter::new(2016, 4).unwrap());
        assert_eq!(q("2016Q4").to_string(), "2016Q4");
        assert_eq!("2016Q5".parse::<Quarter>(), Err(Error::InvalidQuarterIndex(5)));
        assert!(matches!("2016-4".parse::<Quarter>(), Err(Error::MalformedQuarter(_))));
        assert!(matches!("Q4".parse::<Quarter>(), Err(Error::MalformedQuarter(_))));
    }

    #[test]
    fn quarter_wraps_years() {
        assert_eq!(q("2016Q4").next(), q("2017Q1"));
        assert_eq!(q("2017Q1").prev(), q("2016Q4"));
    }

    #[test]
    fn revenue_contiguity() {
        let s = RevenueSeries::from_entries([(q("2016Q1"), 110.0), (q("2015Q4"), 100.0)]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().next(), Some((q("2015Q4"), 100.0)));

        let err = RevenueSeries::from_entries([(q("2015Q4"), 100.0), (q("2016Q2"), 120.0)]).unwrap_err();
        assert_eq!(err, Error::MissingQuarter(q("2016Q1")));
        assert_eq!(err.to_string(), "revenue series has a gap: missing 2016Q1");

        let err = RevenueSeries::from_entries([(q("2016Q1"), -5.0)]).unwrap_err();
        assert!(err.to_string().contains("non-positive revenue"));
    }

    #[test]
    fn review_validation() {
        assert_eq!(
            Review::new("r9", q("2016Q4"), "   ", None),
            Err(Error::EmptyText("r9".into()))
        );
        let a = Review::new("r1", q("2016Q4"), "ok", None).unwrap();
        assert_eq!(validate_reviews(&[a.clone(), a]), Err(Error::DuplicateId("r1".into())));
    }

    #[test]
    fn grouping() {
        assert!(group_by_quarter(&[]).is_empty());
        let mk = |id: &str, quarter: &str| Review::new(id, q(quarter), "text", None).unwrap();
        let reviews = [
            mk("a", "2016Q4"),
            mk("b", "2017Q1"),
            mk("c", "2016Q4"),
            mk("d", "2016Q4"),
        ];
        let groups = group_by_quarter(&reviews);
        assert_eq!(groups.len(), 2);
        let ids: Vec<_> = groups[&q("2016Q4")].iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "d"]);
        assert_eq!(groups[&q("2017Q1")].len(), 1);
    }

    fn arb_quarter() -> impl Strategy<Value = Quarter> {
        (1990i32..2100, 1u32..=4).prop_map(|(y, i)| Quarter::new(y, i).unwrap())
    }

    proptest! {
        #[test]
        fn next_prev_roundtrip(quarter in arb_quarter()) {
            prop_assert_eq!(quarter.prev().next(), quarter);
            prop_assert_eq!(quarter.next().prev(), quarter);
            prop_assert!(quarter < quarter.next());
            prop_assert_eq!(quarter.to_string().parse::<Quarter>().unwrap(), quarter);
        }

        #[test]
        fn sorting_is_idempotent(mut qs in proptest::collection::vec(arb_quarter(), 0..40)) {
            qs.sort();
            let once = qs.clone();
            qs.sort();
            prop_assert_eq!(once, qs);
        }

        #[test]
        fn grouping_is_a_partition(assign in proptest::collection::vec(0u32..6, 0..50)) {
            let reviews: Vec<Review> = assign
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    let quarter = Quarter::new(2015 + (k / 4) as i32, k % 4 + 1).unwrap();
                    Review::new(alloc::format!("r{i}"), quarter, "x", None).unwrap()
                })
                .collect();
            let groups = group_by_quarter(&reviews);
            let mut ids: Vec<&str> = groups.values().flatten().map(|r| r.id.as_str()).collect();
            let mut expected: Vec<&str> = reviews.iter().map(|r| r.id.as_str()).collect();
            ids.sort_unstable();
            expected.sort_unstable();
            prop_assert_eq!(ids, expected);
        }
    }
}
