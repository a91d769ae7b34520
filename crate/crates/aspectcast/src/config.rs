//! Pipeline configuration file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use aspectcast_core::aspect::{base_aspects, builtin_aspects, find_aspect};
use aspectcast_core::features::SplitRatio;
use aspectcast_core::metrics::Metric;
use aspectcast_core::models::{ArimaOrder, ForecasterSpec, ModelSpec, SvrSpec};
use serde::{Deserialize, Serialize};

use crate::bundled;

/// `13`, `16`, or an explicit list of aspect ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AspectSet {
    Count(usize),
    Ids(Vec<String>),
}

impl AspectSet {
    pub fn resolve(&self) -> anyhow::Result<Vec<String>> {
        let ids: Vec<String> = match self {
            AspectSet::Count(13) => base_aspects().iter().map(|a| a.id.to_string()).collect(),
            AspectSet::Count(16) => builtin_aspects().iter().map(|a| a.id.to_string()).collect(),
            AspectSet::Count(n) => bail!("aspect set must be 13, 16 or a list of ids, got {n}"),
            AspectSet::Ids(ids) => {
                let mut seen = BTreeSet::new();
                for id in ids {
                    if find_aspect(id).is_none() {
                        bail!("unknown aspect id '{id}'");
                    }
                    if !seen.insert(id) {
                        bail!("aspect '{id}' listed twice");
                    }
                }
                ids.clone()
            }
        };
        Ok(ids)
    }
}

impl std::str::FromStr for AspectSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "13" => Ok(AspectSet::Count(13)),
            "16" => Ok(AspectSet::Count(16)),
            _ => Err(format!("expected 13 or 16, got '{s}'")),
        }
    }
}

/// Candidate values tried by grid search on the training partition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    /// RBF widths for SVR models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,
    /// `[p, d, q]` orders for ARIMA models.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orders: Vec<[usize; 3]>,
    #[serde(default)]
    pub metric: Metric,
}

impl Tuning {
    /// The base spec's variants, or `None` when nothing applies to it.
    pub fn candidates(&self, base: &ModelSpec) -> anyhow::Result<Option<Vec<ModelSpec>>> {
        match base {
            ModelSpec::Svr(s) if !self.gamma.is_empty() => Ok(Some(
                self.gamma
                    .iter()
                    .map(|&gamma| ModelSpec::Svr(SvrSpec { gamma, ..*s }))
                    .collect(),
            )),
            ModelSpec::Arima(_) if !self.orders.is_empty() => Ok(Some(
                self.orders
                    .iter()
                    .map(|&[p, d, q]| ModelSpec::Arima(ArimaOrder::new(p, d, q)))
                    .collect(),
            )),
            _ if self.gamma.is_empty() && self.orders.is_empty() => Ok(None),
            other => bail!("tuning values do not apply to a {} model", other.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub label: String,
    /// Feature aspects; defaults to the config-wide set. Ignored by ARIMA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspects: Option<AspectSet>,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<Tuning>,
}

fn default_aspects() -> AspectSet {
    AspectSet::Count(16)
}

fn yes() -> bool {
    true
}

fn default_split() -> SplitRatio {
    SplitRatio::TWO_TO_ONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub reviews: String,
    pub revenue: String,
    #[serde(default)]
    pub vocabulary: Option<String>,
    #[serde(default)]
    pub lexicon: Option<String>,
    #[serde(default)]
    pub heuristics: Option<String>,
    #[serde(default = "default_aspects")]
    pub aspects: AspectSet,
    #[serde(default = "yes")]
    pub include_lag: bool,
    #[serde(default = "default_split")]
    pub split: SplitRatio,
    #[serde(default)]
    pub out: Option<String>,
    /// Seed for models that do not set their own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
}

impl PipelineConfig {
    pub fn parse(content: &str) -> anyhow::Result<Self> {
        let config: PipelineConfig = serde_json::from_str(content)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.aspects.resolve().context("aspects")?;
        SplitRatio::new(self.split.train, self.split.test)?;
        let mut labels = BTreeSet::new();
        for m in &self.models {
            if m.label.trim().is_empty() {
                bail!("model labels must be non-empty");
            }
            if !labels.insert(m.label.as_str()) {
                bail!("duplicate model label '{}'", m.label);
            }
            if let Some(a) = &m.aspects {
                a.resolve().with_context(|| format!("model '{}'", m.label))?;
            }
            ForecasterSpec::new(m.model.clone(), 0)
                .validate()
                .with_context(|| format!("model '{}'", m.label))?;
            if let Some(t) = &m.tune {
                t.candidates(&m.model).with_context(|| format!("model '{}'", m.label))?;
            }
        }
        Ok(())
    }

    /// Aspect ids a model reads (before the optional lag column).
    pub fn model_aspects(&self, entry: &ModelEntry) -> anyhow::Result<Vec<String>> {
        if !entry.model.uses_features() {
            return Ok(Vec::new());
        }
        entry.aspects.as_ref().unwrap_or(&self.aspects).resolve()
    }

    pub fn model_seed(&self, entry: &ModelEntry) -> u64 {
        entry.seed.unwrap_or(self.seed)
    }
}

/// Where relative paths in a config resolve.
#[derive(Debug, Clone, PartialEq)]
pub enum Base {
    /// Directory of the config file.
    Dir(PathBuf),
    /// The built-in config: names refer to bundled files.
    Bundled,
}

/// A readable input.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Bundled(&'static str),
}

impl Source {
    pub fn read(&self) -> anyhow::Result<String> {
        match self {
            Source::File(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
            Source::Bundled(name) => bundled::lookup(name)
                .map(str::to_string)
                .with_context(|| format!("no bundled file named '{name}'")),
        }
    }

    /// For messages.
    pub fn describe(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Bundled(name) => format!("bundled:{name}"),
        }
    }

    pub fn path(&self) -> &Path {
        match self {
            Source::File(p) => p,
            Source::Bundled(name) => Path::new(name),
        }
    }
}

impl Base {
    pub fn resolve(&self, name: &str) -> Source {
        if let Some(rest) = name.strip_prefix("bundled:") {
            if let Some(key) = bundled::key(rest) {
                return Source::Bundled(key);
            }
        }
        match self {
            Base::Dir(dir) => Source::File(dir.join(name)),
            Base::Bundled => match bundled::key(name) {
                Some(key) => Source::Bundled(key),
                None => Source::File(PathBuf::from(name)),
            },
        }
    }
}
