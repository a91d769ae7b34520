//! Stage orchestration behind the CLI.
//!
//! Every stage writes its outputs into the out directory. A stage run on
//! its own recomputes what it needs from the config unless an
//! intermediate file is passed in explicitly (`scores`, `features`,
//! `predictions`); `predict` always reads models from `<out>/models`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use aspectcast_core::aspect::{builtin_aspects, match_aspects, term_frequencies, AspectVocabulary, DEFAULT_STOP_WORDS};
use aspectcast_core::corpus::{Quarter, RevenueSeries, Review};
use aspectcast_core::features::{
    aggregate_perceptions, assemble, chronological_split, revenue_growth, FeatureMatrix, GrowthSeries, SplitRatio,
    LAGGED_GROWTH,
};
use aspectcast_core::metrics::{EvalReport, EvalRow, ForecastPoint};
use aspectcast_core::models::{fit, grid_search, ForecasterSpec, ModelSpec};
use aspectcast_core::sentiment::{analyze, HeuristicConfig, SentimentLexicon};
use log::{info, warn};

use crate::bundled;
use crate::config::{AspectSet, Base, ModelEntry, PipelineConfig, Source};
use crate::formats::{self, PredictionRow, ReviewFormat, SavedModel, ScoreRow};

pub const TOP_TERMS: usize = 50;
const DEFAULT_OUT: &str = "aspectcast-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Sentiment,
    Features,
    Fit,
    Predict,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Sentiment => "sentiment",
            Stage::Features => "features",
            Stage::Fit => "fit",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Replaces the config-wide set and every per-model set.
    pub aspects: Option<AspectSet>,
    pub no_lag: bool,
    pub reviews: Option<PathBuf>,
    pub revenue: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub heuristics: Option<PathBuf>,
    /// Precomputed `id,quarter,pos,neu,neg,compound` file.
    pub scores: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

/// Raw inputs after validation.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub reviews: Vec<Review>,
    pub revenue: RevenueSeries,
    pub growth: GrowthSeries,
}

#[derive(Debug)]
pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
    base: Base,
    overrides: Overrides,
}

fn labeled<T>(stage: Stage, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
    f().with_context(|| format!("{} stage failed", stage.name()))
}

fn in_stage<T>(stage: Stage, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
    info!("stage {}", stage.name());
    labeled(stage, f)
}

fn parse_with<T>(source: &Source, parse: impl FnOnce(&str) -> Result<T, formats::FormatError>) -> anyhow::Result<T> {
    let text = source.read()?;
    parse(&text).with_context(|| format!("parsing {}", source.describe()))
}

/// File name for a model label.
pub fn model_file_name(label: &str) -> String {
    let stem: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{stem}.json")
}

impl Context {
    /// Loads `config` (or the bundled default) and applies `overrides`.
    pub fn load(config: Option<&Path>, overrides: Overrides) -> anyhow::Result<Self> {
        let (text, base, dir) = match config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (text, Base::Dir(dir.clone()), Some(dir))
            }
            None => (bundled::DEFAULT_CONFIG.to_string(), Base::Bundled, None),
        };
        let describe = config.map_or_else(
            || "bundled:default_config.json".to_string(),
            |p| p.display().to_string(),
        );
        let mut cfg = PipelineConfig::parse(&text).with_context(|| format!("config {describe}"))?;
        if let Some(a) = &overrides.aspects {
            cfg.aspects = a.clone();
            for m in &mut cfg.models {
                m.aspects = None;
            }
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
            for m in &mut cfg.models {
                m.seed = None;
            }
        }
        if overrides.no_lag {
            cfg.include_lag = false;
        }
        cfg.validate().with_context(|| format!("config {describe}"))?;
        let out = match (&overrides.out, &cfg.out, dir) {
            (Some(o), _, _) => o.clone(),
            (None, Some(o), Some(dir)) => dir.join(o),
            (None, Some(o), None) => PathBuf::from(o),
            (None, None, _) => PathBuf::from(DEFAULT_OUT),
        };
        Ok(Context {
            config: cfg,
            out,
            base,
            overrides,
        })
    }

    fn source(&self, flag: &Option<PathBuf>, configured: Option<&str>) -> Option<Source> {
        match flag {
            Some(p) => Some(Source::File(p.clone())),
            None => configured.map(|name| self.base.resolve(name)),
        }
    }

    fn write(&self, name: &str, content: &str) -> anyhow::Result<PathBuf> {
        let path = self.out.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn load_reviews(&self) -> anyhow::Result<Vec<Review>> {
        let src = self
            .source(&self.overrides.reviews, Some(&self.config.reviews))
            .expect("always set");
        let format = ReviewFormat::from_path(src.path());
        parse_with(&src, |t| formats::parse_reviews(t, format))
    }

    pub fn load_revenue(&self) -> anyhow::Result<RevenueSeries> {
        let src = self
            .source(&self.overrides.revenue, Some(&self.config.revenue))
            .expect("always set");
        parse_with(&src, formats::parse_revenue)
    }

    pub fn load_lexicon(&self) -> anyhow::Result<SentimentLexicon> {
        match self.source(&self.overrides.lexicon, self.config.lexicon.as_deref()) {
            Some(src) => parse_with(&src, formats::parse_lexicon),
            None => Ok(bundled::default_lexicon()),
        }
    }

    pub fn load_vocabulary(&self) -> anyhow::Result<AspectVocabulary> {
        match self.source(&self.overrides.vocabulary, self.config.vocabulary.as_deref()) {
            Some(src) => parse_with(&src, formats::parse_vocabulary),
            None => Ok(bundled::default_vocabulary()),
        }
    }

    pub fn load_heuristics(&self) -> anyhow::Result<HeuristicConfig> {
        match self.source(&self.overrides.heuristics, self.config.heuristics.as_deref()) {
            Some(src) => parse_with(&src, formats::parse_heuristics),
            None => Ok(HeuristicConfig::default()),
        }
    }

    fn load_growth(&self) -> anyhow::Result<GrowthSeries> {
        Ok(revenue_growth(&self.load_revenue()?)?)
    }

    /// Aspect columns in the feature file: the config-wide set followed
    /// by any extra aspects individual models ask for.
    pub fn feature_aspects(&self) -> anyhow::Result<Vec<String>> {
        let mut aspects = self.config.aspects.resolve()?;
        let mut extra = Vec::new();
        for m in &self.config.models {
            for a in self.config.model_aspects(m)? {
                if !aspects.contains(&a) && !extra.contains(&a) {
                    extra.push(a);
                }
            }
        }
        let order = |id: &String| builtin_aspects().iter().position(|a| a.id == id.as_str());
        extra.sort_by_key(order);
        aspects.extend(extra);
        Ok(aspects)
    }

    /// Columns `entry` is fitted on.
    pub fn model_columns(&self, entry: &ModelEntry) -> anyhow::Result<Vec<String>> {
        let mut cols = self.config.model_aspects(entry)?;
        if entry.model.uses_features() && self.config.include_lag {
            cols.push(LAGGED_GROWTH.to_string());
        }
        Ok(cols)
    }

    pub fn ingest(&self) -> anyhow::Result<Ingested> {
        in_stage(Stage::Ingest, || {
            let reviews = self.load_reviews()?;
            let revenue = self.load_revenue()?;
            let growth = revenue_growth(&revenue).context("computing revenue growth")?;
            info!("{} reviews, {} revenue quarters", reviews.len(), revenue.len());
            self.write("reviews.jsonl", &formats::write_reviews_jsonl(&reviews))?;
            self.write("growth.csv", &formats::write_growth(&revenue, &growth))?;
            let terms = term_frequencies(&reviews, TOP_TERMS, DEFAULT_STOP_WORDS);
            self.write("terms.csv", &formats::write_terms(&terms))?;
            Ok(Ingested {
                reviews,
                revenue,
                growth,
            })
        })
    }

    pub fn sentiment(&self, reviews: &[Review]) -> anyhow::Result<Vec<ScoreRow>> {
        in_stage(Stage::Sentiment, || {
            let rows = self.score(reviews)?;
            self.write("scores.csv", &formats::write_scores(&rows))?;
            Ok(rows)
        })
    }

    fn score(&self, reviews: &[Review]) -> anyhow::Result<Vec<ScoreRow>> {
        let lexicon = self.load_lexicon()?;
        let heuristics = self.load_heuristics()?;
        Ok(score_reviews(reviews, &lexicon, &heuristics))
    }

    /// Scores from the `scores` override, or computed.
    fn scores_for(&self, reviews: &[Review]) -> anyhow::Result<Vec<ScoreRow>> {
        match &self.overrides.scores {
            Some(p) => parse_with(&Source::File(p.clone()), formats::parse_scores),
            None => self.score(reviews),
        }
    }

    pub fn features(
        &self,
        reviews: &[Review],
        growth: &GrowthSeries,
        scores: &[ScoreRow],
    ) -> anyhow::Result<FeatureMatrix> {
        in_stage(Stage::Features, || {
            let vocab = self.load_vocabulary()?;
            let aspects = self.feature_aspects()?;
            let (perceptions, matrix) =
                build_features(reviews, scores, &vocab, growth, &aspects, self.config.include_lag)?;
            self.write("perceptions.csv", &formats::write_perceptions(&perceptions))?;
            self.write("features.csv", &formats::write_features(&matrix))?;
            Ok(matrix)
        })
    }

    /// Features from the `features` override, or computed from the config.
    fn features_for(&self) -> anyhow::Result<FeatureMatrix> {
        if let Some(p) = &self.overrides.features {
            return parse_with(&Source::File(p.clone()), formats::parse_features).context("loading features");
        }
        let reviews = self.load_reviews()?;
        let growth = self.load_growth()?;
        let scores = self.scores_for(&reviews)?;
        self.features(&reviews, &growth, &scores)
    }

    pub fn fit(&self, features: &FeatureMatrix) -> anyhow::Result<Vec<SavedModel>> {
        in_stage(Stage::Fit, || {
            if self.config.models.is_empty() {
                bail!("the config lists no models");
            }
            let (train, _) = chronological_split(features, self.config.split)?;
            info!("training on {} of {} rows", train.n_rows(), features.n_rows());
            let mut tuning = String::from("model,candidate,score,selected,error\n");
            let mut saved = Vec::new();
            for entry in &self.config.models {
                let model = self
                    .fit_one(entry, &train, &mut tuning)
                    .with_context(|| format!("model '{}'", entry.label))?;
                self.write(
                    &format!("models/{}", model_file_name(&entry.label)),
                    &formats::write_model(&model),
                )?;
                saved.push(model);
            }
            self.write("tuning.csv", &tuning)?;
            Ok(saved)
        })
    }

    fn fit_one(&self, entry: &ModelEntry, train: &FeatureMatrix, tuning: &mut String) -> anyhow::Result<SavedModel> {
        let columns = self.model_columns(entry)?;
        let data = train.select_columns(&columns)?;
        let seed = self.config.model_seed(entry);
        let candidates = match &entry.tune {
            Some(t) => t.candidates(&entry.model)?.map(|c| (c, t.metric)),
            None => None,
        };
        let spec = match candidates {
            Some((models, metric)) => {
                let specs: Vec<ForecasterSpec> = models.into_iter().map(|m| ForecasterSpec::new(m, seed)).collect();
                let ranked = grid_search(&specs, &data, SplitRatio::TWO_TO_ONE, metric).context("grid search")?;
                let best = ranked.iter().find(|e| e.score.is_ok()).map(|e| e.index);
                let mut by_index: Vec<_> = ranked.iter().collect();
                by_index.sort_by_key(|e| e.index);
                for e in by_index {
                    let (score, error) = match &e.score {
                        Ok(s) => (format!("{s:.9}"), String::new()),
                        Err(err) => (String::new(), csv_field(&err.to_string())),
                    };
                    let _ = writeln!(
                        tuning,
                        "{},{},{score},{},{error}",
                        csv_field(&entry.label),
                        csv_field(&candidate_name(&e.spec.model)),
                        Some(e.index) == best
                    );
                }
                let Some(best) = best else {
                    bail!("every tuning candidate failed");
                };
                info!("{}: selected {}", entry.label, candidate_name(&specs[best].model));
                specs[best].clone()
            }
            None => ForecasterSpec::new(entry.model.clone(), seed),
        };
        let model = fit(&spec, &data)?;
        Ok(SavedModel {
            label: entry.label.clone(),
            columns,
            spec,
            model,
        })
    }

    /// Models saved by an earlier `fit`, in config order.
    pub fn load_models(&self) -> anyhow::Result<Vec<SavedModel>> {
        self.config
            .models
            .iter()
            .map(|entry| {
                let src = Source::File(self.out.join("models").join(model_file_name(&entry.label)));
                let model = parse_with(&src, formats::parse_model)?;
                if model.label != entry.label {
                    bail!(
                        "{} holds model '{}', expected '{}'",
                        src.describe(),
                        model.label,
                        entry.label
                    );
                }
                Ok(model)
            })
            .collect()
    }

    pub fn predict(&self, features: &FeatureMatrix, models: &[SavedModel]) -> anyhow::Result<Vec<PredictionRow>> {
        in_stage(Stage::Predict, || {
            let (_, test) = chronological_split(features, self.config.split)?;
            let mut rows = Vec::new();
            for m in models {
                rows.extend(predict_rows(m, &test).with_context(|| format!("model '{}'", m.label))?);
            }
            self.write("predictions.csv", &formats::write_predictions(&rows))?;
            Ok(rows)
        })
    }

    pub fn evaluate(&self, predictions: &[PredictionRow], growth: &GrowthSeries) -> anyhow::Result<EvalReport> {
        in_stage(Stage::Evaluate, || {
            let report = build_report(predictions, growth)?;
            self.write("report.csv", &formats::report_csv(&report))?;
            self.write("report.json", &formats::report_json(&report))?;
            self.write("plot.csv", &formats::plot_csv(&report))?;
            Ok(report)
        })
    }

    /// Runs one subcommand.
    pub fn run(&self, stage: Stage) -> anyhow::Result<()> {
        match stage {
            Stage::Ingest => {
                self.ingest()?;
            }
            Stage::Sentiment => {
                let reviews = labeled(Stage::Sentiment, || self.load_reviews())?;
                self.sentiment(&reviews)?;
            }
            Stage::Features => {
                let (reviews, growth, scores) = labeled(Stage::Features, || {
                    let reviews = self.load_reviews()?;
                    let growth = self.load_growth()?;
                    let scores = self.scores_for(&reviews)?;
                    Ok((reviews, growth, scores))
                })?;
                self.features(&reviews, &growth, &scores)?;
            }
            Stage::Fit => {
                let features = labeled(Stage::Fit, || self.features_for())?;
                self.fit(&features)?;
            }
            Stage::Predict => {
                let (features, models) = labeled(Stage::Predict, || Ok((self.features_for()?, self.load_models()?)))?;
                self.predict(&features, &models)?;
            }
            Stage::Evaluate => {
                let (predictions, growth) = labeled(Stage::Evaluate, || {
                    let src = Source::File(
                        self.overrides
                            .predictions
                            .clone()
                            .unwrap_or_else(|| self.out.join("predictions.csv")),
                    );
                    let predictions = parse_with(&src, formats::parse_predictions)?;
                    let growth = match &self.overrides.features {
                        Some(_) => self.features_for()?.target_series(),
                        None => self.load_growth()?,
                    };
                    Ok((predictions, growth))
                })?;
                self.evaluate(&predictions, &growth)?;
            }
        }
        Ok(())
    }

    /// Every stage in order, passing results along in memory.
    pub fn run_pipeline(&self) -> anyhow::Result<EvalReport> {
        let ingested = self.ingest()?;
        let scores = match &self.overrides.scores {
            Some(_) => labeled(Stage::Sentiment, || self.scores_for(&ingested.reviews))?,
            None => self.sentiment(&ingested.reviews)?,
        };
        let features = self.features(&ingested.reviews, &ingested.growth, &scores)?;
        let models = self.fit(&features)?;
        let predictions = self.predict(&features, &models)?;
        self.evaluate(&predictions, &ingested.growth)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Short description of a tuning candidate.
pub fn candidate_name(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Svr(s) => format!("gamma={}", s.gamma),
        ModelSpec::Arima(order) => order.to_string(),
        other => other.kind().to_string(),
    }
}

pub fn score_reviews(reviews: &[Review], lexicon: &SentimentLexicon, heuristics: &HeuristicConfig) -> Vec<ScoreRow> {
    reviews
        .iter()
        .map(|r| ScoreRow {
            id: r.id.clone(),
            quarter: r.quarter,
            scores: analyze(&r.text, lexicon, heuristics),
        })
        .collect()
}

/// Matching, perception and assembly. Perceptions cover every growth
/// quarter; quarters without matching reviews get zeros.
pub fn build_features(
    reviews: &[Review],
    scores: &[ScoreRow],
    vocab: &AspectVocabulary,
    growth: &GrowthSeries,
    aspects: &[String],
    include_lag: bool,
) -> anyhow::Result<(Vec<aspectcast_core::features::PerceptionRecord>, FeatureMatrix)> {
    let mut compounds: BTreeMap<String, (Quarter, f64)> = BTreeMap::new();
    for s in scores {
        if compounds.insert(s.id.clone(), (s.quarter, s.scores.compound)).is_some() {
            bail!("review '{}' is scored twice", s.id);
        }
    }
    let missing = reviews.iter().filter(|r| !compounds.contains_key(&r.id)).count();
    if missing > 0 {
        warn!("{missing} reviews have no sentiment score and are skipped");
    }
    let quarters = growth.quarters();
    let outside = reviews
        .iter()
        .filter(|r| quarters.binary_search(&r.quarter).is_err())
        .count();
    if outside > 0 {
        warn!("{outside} reviews fall outside the revenue quarters");
    }
    let matches: Vec<_> = reviews.iter().flat_map(|r| match_aspects(r, vocab)).collect();
    let ids: Vec<&str> = aspects.iter().map(String::as_str).collect();
    let perceptions = aggregate_perceptions(&matches, &compounds, &ids, &quarters)?;
    let matrix = assemble(&perceptions, growth, aspects, include_lag)?;
    Ok((perceptions, matrix))
}

pub fn predict_rows(model: &SavedModel, test: &FeatureMatrix) -> anyhow::Result<Vec<PredictionRow>> {
    let data = test.select_columns(&model.columns)?;
    let predicted = model.model.predict(&data)?;
    Ok(data
        .quarters
        .iter()
        .zip(&data.targets)
        .zip(predicted)
        .map(|((&quarter, &actual), predicted)| PredictionRow {
            model: model.label.clone(),
            quarter,
            actual,
            predicted,
        })
        .collect())
}

/// One report row per model, in order of first appearance. The U2
/// history point is the growth one quarter before a model's first
/// prediction, when known.
pub fn build_report(predictions: &[PredictionRow], growth: &GrowthSeries) -> anyhow::Result<EvalReport> {
    let mut order: Vec<&str> = Vec::new();
    let mut points: BTreeMap<&str, Vec<ForecastPoint>> = BTreeMap::new();
    for p in predictions {
        if !points.contains_key(p.model.as_str()) {
            order.push(&p.model);
        }
        points.entry(&p.model).or_default().push(ForecastPoint {
            quarter: p.quarter,
            actual: p.actual,
            predicted: p.predicted,
        });
    }
    let mut report = EvalReport::default();
    for label in order {
        let mut pts = points.remove(label).expect("collected above");
        pts.sort_by_key(|p| p.quarter);
        if pts.windows(2).any(|w| w[0].quarter == w[1].quarter) {
            bail!("model '{label}' has two predictions for one quarter");
        }
        let history = growth.get(pts[0].quarter.prev());
        report
            .rows
            .push(EvalRow::from_points(label, pts, history).with_context(|| format!("scoring model '{label}'"))?);
    }
    Ok(report)
}
