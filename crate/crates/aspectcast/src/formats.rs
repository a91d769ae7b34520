//! Readers and writers for every file the pipeline consumes or emits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use aspectcast_core::aspect::AspectVocabulary;
use aspectcast_core::corpus::{validate_reviews, Quarter, RevenueSeries, Review};
use aspectcast_core::features::{FeatureMatrix, GrowthSeries, PerceptionRecord};
use aspectcast_core::metrics::EvalReport;
use aspectcast_core::models::{FittedModel, ForecasterSpec};
use aspectcast_core::sentiment::{HeuristicConfig, SentimentLexicon, SentimentScores};
use serde::{Deserialize, Serialize};

/// Column holding the prediction target in feature files.
pub const TARGET_COLUMN: &str = "target_growth";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Core(#[from] aspectcast_core::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid CSV: {0}")]
    Csv(#[from] csv::Error),
}

type Result<T> = std::result::Result<T, FormatError>;

fn at_line(line: u64, message: impl ToString) -> FormatError {
    FormatError::Line {
        line,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewFormat {
    Jsonl,
    Csv,
}

impl ReviewFormat {
    /// `.csv` means CSV; anything else is read as JSON Lines.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReviewFormat::Csv,
            _ => ReviewFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReview {
    id: String,
    quarter: String,
    text: String,
    #[serde(default)]
    source: Option<String>,
}

fn review_from_raw(raw: RawReview, line: u64) -> Result<Review> {
    let quarter: Quarter = raw.quarter.parse().map_err(|e| at_line(line, e))?;
    Review::new(raw.id, quarter, raw.text, raw.source).map_err(|e| at_line(line, e))
}

/// Parses reviews; ids must be unique across the file.
pub fn parse_reviews(content: &str, format: ReviewFormat) -> Result<Vec<Review>> {
    let mut reviews = Vec::new();
    match format {
        ReviewFormat::Jsonl => {
            for (i, line) in content.lines().enumerate() {
                let n = i as u64 + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawReview = serde_json::from_str(line).map_err(|e| at_line(n, e))?;
                reviews.push(review_from_raw(raw, n)?);
            }
        }
        ReviewFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new().from_reader(content.as_bytes());
            let headers = rdr.headers()?.clone();
            for col in ["id", "quarter", "text"] {
                if !headers.iter().any(|h| h == col) {
                    return Err(FormatError::Header {
                        expected: "id,quarter,text".into(),
                        found: headers.iter().collect::<Vec<_>>().join(","),
                    });
                }
            }
            for record in rdr.deserialize::<RawReview>() {
                let record = record.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line());
                    at_line(line, e)
                })?;
                // header is line 1
                let line = reviews.len() as u64 + 2;
                reviews.push(review_from_raw(record, line)?);
            }
        }
    }
    validate_reviews(&reviews)?;
    Ok(reviews)
}

pub fn write_reviews_jsonl(reviews: &[Review]) -> String {
    let mut out = String::new();
    for r in reviews {
        out.push_str(&serde_json::to_string(r).expect("reviews serialize"));
        out.push('\n');
    }
    out
}

fn expect_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers()?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(FormatError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn parse_number(field: &str, line: u64, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| at_line(line, format!("{what} '{field}' is not a number")))
}

/// `quarter,revenue` rows in any order.
pub fn parse_revenue(content: &str) -> Result<RevenueSeries> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    expect_header(&mut rdr, &["quarter", "revenue"])?;
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let quarter: Quarter = record[0].trim().parse().map_err(|e| at_line(line, e))?;
        entries.push((quarter, parse_number(&record[1], line, "revenue")?));
    }
    Ok(RevenueSeries::from_entries(entries)?)
}

/// `token<TAB>valence[<TAB>...]`; later duplicates win.
pub fn parse_lexicon(content: &str) -> Result<SentimentLexicon> {
    let mut lexicon = SentimentLexicon::new();
    for (i, line) in content.lines().enumerate() {
        let n = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        let valence = fields
            .next()
            .ok_or_else(|| at_line(n, format!("no valence column for '{token}'")))?;
        let valence = parse_number(valence, n, "valence")?;
        lexicon.insert(token, valence).map_err(|e| at_line(n, e))?;
    }
    Ok(lexicon)
}

/// JSON object of aspect id to phrase list.
pub fn parse_vocabulary(content: &str) -> Result<AspectVocabulary> {
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(content)?;
    Ok(AspectVocabulary::new(raw)?)
}

/// Any subset of heuristic fields; the rest keep their defaults.
pub fn parse_heuristics(content: &str) -> Result<HeuristicConfig> {
    let config: HeuristicConfig = serde_json::from_str(content)?;
    config.validate()?;
    Ok(config)
}

/// One scored review.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub id: String,
    pub quarter: Quarter,
    pub scores: SentimentScores,
}

pub fn write_scores(rows: &[ScoreRow]) -> String {
    let mut out = String::from("id,quarter,pos,neu,neg,compound\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        let s = &r.scores;
        w.write_record([
            r.id.clone(),
            r.quarter.to_string(),
            s.positive.to_string(),
            s.neutral.to_string(),
            s.negative.to_string(),
            s.compound.to_string(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
    out
}

pub fn parse_scores(content: &str) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    expect_header(&mut rdr, &["id", "quarter", "pos", "neu", "neg", "compound"])?;
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(at_line(line, aspectcast_core::Error::DuplicateId(id)));
        }
        let compound = parse_number(&record[5], line, "compound")?;
        if !(-1.0..=1.0).contains(&compound) {
            return Err(at_line(line, aspectcast_core::Error::CompoundOutOfRange(compound)));
        }
        rows.push(ScoreRow {
            id,
            quarter: record[1].trim().parse().map_err(|e| at_line(line, e))?,
            scores: SentimentScores {
                positive: parse_number(&record[2], line, "pos")?,
                neutral: parse_number(&record[3], line, "neu")?,
                negative: parse_number(&record[4], line, "neg")?,
                compound,
            },
        });
    }
    Ok(rows)
}

pub fn write_growth(revenue: &RevenueSeries, growth: &GrowthSeries) -> String {
    let mut out = String::from("quarter,revenue,growth\n");
    for (q, r) in revenue.iter() {
        let g = growth.get(q).map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{q},{r},{g}");
    }
    out
}

pub fn write_terms(terms: &[(String, usize)]) -> String {
    let mut out = String::from("token,count\n");
    for (t, c) in terms {
        let _ = writeln!(out, "{t},{c}");
    }
    out
}

pub fn write_perceptions(records: &[PerceptionRecord]) -> String {
    let mut out = String::from("aspect,quarter,review_count,compound_sum,perception\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.aspect_id, r.quarter, r.review_count, r.compound_sum, r.perception
        );
    }
    out
}

/// `quarter,<columns...>,target_growth` with round-trip exact numbers.
pub fn write_features(m: &FeatureMatrix) -> String {
    let mut out = String::from("quarter");
    for c in &m.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push(',');
    out.push_str(TARGET_COLUMN);
    out.push('\n');
    for ((q, row), t) in m.quarters.iter().zip(&m.rows).zip(&m.targets) {
        out.push_str(&q.to_string());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{t}");
    }
    out
}

pub fn parse_features(content: &str) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.len() < 2 || headers[0] != "quarter" || headers[headers.len() - 1] != TARGET_COLUMN {
        return Err(FormatError::Header {
            expected: format!("quarter,<features...>,{TARGET_COLUMN}"),
            found: headers.join(","),
        });
    }
    let columns = headers[1..headers.len() - 1].to_vec();
    let (mut quarters, mut rows, mut targets) = (Vec::new(), Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        quarters.push(record[0].trim().parse::<Quarter>().map_err(|e| at_line(line, e))?);
        let values = (1..record.len())
            .map(|i| parse_number(&record[i], line, &headers[i]))
            .collect::<Result<Vec<f64>>>()?;
        targets.push(values[values.len() - 1]);
        rows.push(values[..values.len() - 1].to_vec());
    }
    Ok(FeatureMatrix::new(quarters, columns, rows, targets)?)
}

/// A fitted model with what is needed to reuse it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub label: String,
    /// Feature columns in the order the model reads them.
    pub columns: Vec<String>,
    pub spec: ForecasterSpec,
    pub model: FittedModel,
}

pub fn write_model(model: &SavedModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("models serialize");
    s.push('\n');
    s
}

pub fn parse_model(content: &str) -> Result<SavedModel> {
    Ok(serde_json::from_str(content)?)
}

/// One out-of-sample prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub model: String,
    pub quarter: Quarter,
    pub actual: f64,
    pub predicted: f64,
}

pub fn write_predictions(rows: &[PredictionRow]) -> String {
    let mut out = String::from("model,quarter,actual,predicted\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.quarter.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])
        .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
    out
}

pub fn parse_predictions(content: &str) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(content.as_bytes());
    expect_header(&mut rdr, &["model", "quarter", "actual", "predicted"])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(PredictionRow {
            model: record[0].to_string(),
            quarter: record[1].trim().parse().map_err(|e| at_line(line, e))?,
            actual: parse_number(&record[2], line, "actual")?,
            predicted: parse_number(&record[3], line, "predicted")?,
        });
    }
    Ok(rows)
}

fn fixed(v: f64) -> String {
    format!("{v:.9}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `model,mse,rmse,theils_u`, one line per row in report order.
pub fn report_csv(report: &EvalReport) -> String {
    let mut out = String::from("model,mse,rmse,theils_u\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&r.model),
            fixed(r.mse),
            fixed(r.rmse),
            fixed(r.theils_u)
        );
    }
    out
}

fn round9(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// The CSV report's fields plus per-quarter points, rounded the same way.
pub fn report_json(report: &EvalReport) -> String {
    let mut rounded = report.clone();
    for r in &mut rounded.rows {
        r.mse = round9(r.mse);
        r.rmse = round9(r.rmse);
        r.theils_u = round9(r.theils_u);
        for p in &mut r.points {
            p.actual = round9(p.actual);
            p.predicted = round9(p.predicted);
        }
    }
    let mut s = serde_json::to_string_pretty(&rounded).expect("reports serialize");
    s.push('\n');
    s
}

/// `quarter,actual,<model labels...>`: actual vs predicted per quarter.
pub fn plot_csv(report: &EvalReport) -> String {
    let mut out = String::from("quarter,actual");
    for r in &report.rows {
        out.push(',');
        out.push_str(&csv_field(&r.model));
    }
    out.push('\n');
    let mut quarters: BTreeMap<Quarter, f64> = BTreeMap::new();
    for r in &report.rows {
        for p in &r.points {
            quarters.entry(p.quarter).or_insert(p.actual);
        }
    }
    for (q, actual) in quarters {
        out.push_str(&format!("{q},{}", fixed(actual)));
        for r in &report.rows {
            out.push(',');
            if let Some(p) = r.points.iter().find(|p| p.quarter == q) {
                out.push_str(&fixed(p.predicted));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use aspectcast_core::metrics::{EvalRow, ForecastPoint};

    #[test]
    fn jsonl_review() {
        let r = parse_reviews(
            r#"{"id":"r1","quarter":"2016Q4","text":"great support"}"#,
            ReviewFormat::Jsonl,
        )
        .unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].id, "r1");
        assert_eq!(r[0].quarter.to_string(), "2016Q4");
        assert_eq!(r[0].text, "great support");
        assert_eq!(r[0].source, None);
    }

    #[test]
    fn review_errors_carry_line_numbers() {
        let bad = "{\"id\":\"a\",\"quarter\":\"2016Q4\",\"text\":\"ok\"}\n{\"id\":\"b\",\"quarter\":\"2016Q5\",\"text\":\"ok\"}";
        let msg = parse_reviews(bad, ReviewFormat::Jsonl).unwrap_err().to_string();
        assert!(
            msg.starts_with("line 2:") && msg.contains("invalid quarter index"),
            "{msg}"
        );
        let msg = parse_reviews("{not json", ReviewFormat::Jsonl).unwrap_err().to_string();
        assert!(msg.starts_with("line 1:"), "{msg}");
        let empty = "id,quarter,text\nx1,2016Q1,fine\nx2,2016Q1,   \n";
        let msg = parse_reviews(empty, ReviewFormat::Csv).unwrap_err().to_string();
        assert!(msg.contains("line 3") && msg.contains("'x2'"), "{msg}");
        let dup = "id,quarter,text\nx1,2016Q1,fine\nx1,2016Q2,also fine\n";
        assert!(parse_reviews(dup, ReviewFormat::Csv)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn csv_reviews() {
        assert!(parse_reviews("id,quarter,text\n", ReviewFormat::Csv)
            .unwrap()
            .is_empty());
        let r = parse_reviews("id,quarter,text\nc1,2017Q2,\"slow, but secure\"\n", ReviewFormat::Csv).unwrap();
        assert_eq!(r[0].text, "slow, but secure");
        assert!(parse_reviews("id,text\n", ReviewFormat::Csv).is_err());
    }

    #[test]
    fn revenue_rules() {
        let s = parse_revenue("quarter,revenue\n2016Q1,110\n2015Q4,100\n").unwrap();
        assert_eq!(s.len(), 2);
        let e = parse_revenue("quarter,revenue\n2015Q4,100\n2016Q2,120\n").unwrap_err();
        assert!(e.to_string().contains("missing 2016Q1"), "{e}");
        let e = parse_revenue("quarter,revenue\n2016Q1,-5\n").unwrap_err();
        assert!(e.to_string().contains("non-positive revenue"), "{e}");
        let e = parse_revenue("quarter,revenue\n2016Q1,abc\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn lexicon_rules() {
        let lex = parse_lexicon("good\t1.9\n").unwrap();
        assert_eq!(lex.get("good"), Some(1.9));
        let e = parse_lexicon("fine\t1\nbad\t-9.0\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("valence out of range"), "{e}");
        let lex = parse_lexicon("ok\t0.5\nok\t0.9\n").unwrap();
        assert_eq!(lex.get("ok"), Some(0.9));
        assert_eq!(lex.len(), 1);
        let lex = parse_lexicon("meh\t-0.3\t0.4\t[0, -1]\n").unwrap();
        assert_eq!(lex.get("meh"), Some(-0.3));
        assert!(parse_lexicon("x\tnope\n")
            .unwrap_err()
            .to_string()
            .contains("not a number"));
    }

    #[test]
    fn vocabulary_rules() {
        let v = parse_vocabulary(r#"{"after_sales_experience":["customer service","support"]}"#).unwrap();
        assert_eq!(v.phrases("after_sales_experience").unwrap().count(), 2);
        let e = parse_vocabulary(r#"{"vibes":["x"]}"#).unwrap_err().to_string();
        assert!(e.contains("vibes"), "{e}");
        assert!(parse_vocabulary(r#"{"security_concerns":[]}"#).is_err());
    }

    #[test]
    fn heuristic_overrides() {
        let h = parse_heuristics(r#"{"alpha": 10}"#).unwrap();
        assert_eq!(h.alpha, 10.0);
        assert_eq!(h.caps_boost, HeuristicConfig::default().caps_boost);
        assert!(parse_heuristics(r#"{"alpha": -1}"#).is_err());
        assert!(parse_heuristics(r#"{"alpah": 1}"#).is_err());
    }

    #[test]
    fn features_round_trip() {
        let q: Quarter = "2016Q1".parse().unwrap();
        let m = FeatureMatrix::new(
            vec![q, q.next()],
            vec!["cost_savings".into(), "lagged_growth".into()],
            vec![vec![0.1 + 0.2, -1.0 / 3.0], vec![0.0, 1e-17]],
            vec![0.07, 0.123456789123],
        )
        .unwrap();
        let text = write_features(&m);
        assert!(text.starts_with("quarter,cost_savings,lagged_growth,target_growth\n"));
        assert_eq!(parse_features(&text).unwrap(), m);
    }

    #[test]
    fn scores_round_trip() {
        let rows = vec![ScoreRow {
            id: "a,b".into(),
            quarter: "2016Q1".parse().unwrap(),
            scores: SentimentScores {
                positive: 0.466,
                neutral: 0.534,
                negative: 0.0,
                compound: 0.54,
            },
        }];
        let text = write_scores(&rows);
        assert_eq!(parse_scores(&text).unwrap(), rows);
        assert_eq!(write_scores(&[]), "id,quarter,pos,neu,neg,compound\n");
    }

    fn row(label: &str) -> EvalRow {
        EvalRow {
            model: label.into(),
            mse: 0.000143942,
            rmse: 0.011997583,
            theils_u: 0.354241995,
            points: vec![ForecastPoint {
                quarter: "2018Q1".parse().unwrap(),
                actual: 0.1,
                predicted: 0.11,
            }],
        }
    }

    #[test]
    fn report_layouts() {
        let empty = EvalReport::default();
        assert_eq!(report_csv(&empty), "model,mse,rmse,theils_u\n");
        let one = EvalReport {
            rows: vec![row("SVM-13")],
        };
        assert_eq!(
            report_csv(&one),
            "model,mse,rmse,theils_u\nSVM-13,0.000143942,0.011997583,0.354241995\n"
        );
        let labels = ["ARIMA", "LR-13", "LR-16", "ANN-13", "ANN-16", "SVM-13", "SVM-16"];
        let seven = EvalReport {
            rows: labels.iter().map(|l| row(l)).collect(),
        };
        let csv = report_csv(&seven);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 8);
        for (line, label) in lines[1..].iter().zip(labels) {
            assert!(line.starts_with(&format!("{label},")));
        }
        assert_eq!(
            plot_csv(&seven).lines().next().unwrap(),
            "quarter,actual,ARIMA,LR-13,LR-16,ANN-13,ANN-16,SVM-13,SVM-16"
        );
        let json: serde_json::Value = serde_json::from_str(&report_json(&one)).unwrap();
        assert_eq!(json["rows"][0]["model"], "SVM-13");
        assert_eq!(json["rows"][0]["mse"], 0.000143942);
    }

    #[test]
    fn predictions_round_trip() {
        let rows = vec![PredictionRow {
            model: "LR-16".into(),
            quarter: "2018Q2".parse().unwrap(),
            actual: 0.0123,
            predicted: -0.5,
        }];
        assert_eq!(parse_predictions(&write_predictions(&rows)).unwrap(), rows);
    }
}
