//! Pipeline configuration: flat `key = value` text with dotted section keys.
//!
//! ```text
//! # comments start with '#'
//! corpus.path = corpus.jsonl
//! filter.strategy = lexical
//! filter.phrases = phrases.txt
//! extract.extractors = gazetteer, pattern
//! extract.registry = brands.jsonl
//! associate.level = sentence
//! ```
//!
//! Relative paths resolve against the config file's directory. Unknown keys
//! are rejected, as are duplicated ones.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::associate::{Bucketing, WindowLevel, DEFAULT_EXAMPLE_REFS};
use crate::dedup::{DEFAULT_GRID_END, DEFAULT_GRID_START, DEFAULT_GRID_STEP, DEFAULT_MAX_BATCH};
use crate::embed::DEFAULT_DIM;
use crate::extract::{EntityType, ExtractorId};
use crate::filter::{FilterStrategy, DEFAULT_MIN_HITS, DEFAULT_THRESHOLD};
use crate::graph::GraphFormat;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} set twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: invalid value {value:?}: {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("{key}: file {path} does not exist")]
    MissingFile { key: String, path: PathBuf },
    #[error("{key} must be set: {why}")]
    Required { key: &'static str, why: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    HashedTf,
    Http,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hashed-tf" => Ok(ProviderKind::HashedTf),
            "http" => Ok(ProviderKind::Http),
            _ => Err("expected hashed-tf or http".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterConfig {
    pub strategy: FilterStrategy,
    /// Phrase file for the lexical filter, one phrase per line.
    pub phrases: Option<PathBuf>,
    /// Query text for the semantic filter.
    pub query: Option<String>,
    pub threshold: f64,
    pub min_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingConfig {
    pub provider: ProviderKind,
    pub dim: usize,
    pub url: Option<String>,
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DedupConfig {
    pub enabled: bool,
    pub grid_start: f64,
    pub grid_end: f64,
    pub grid_step: f64,
    /// Fixed cut threshold; disables silhouette tuning.
    pub threshold: Option<f64>,
    pub max_batch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractConfig {
    pub extractors: Vec<ExtractorId>,
    pub registry: Vec<PathBuf>,
    /// JSON list of `{"name", "triggers"}` product categories.
    pub categories: Option<PathBuf>,
    /// JSON object of event trigger to event type.
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalConfig {
    pub url: Option<String>,
    pub confidence: f64,
    pub max_concurrency: usize,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_ms: u64,
    pub type_map: Vec<(String, EntityType)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociateConfig {
    pub level: WindowLevel,
    pub bucket: Bucketing,
    pub example_refs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphConfig {
    pub min_count: u64,
    pub format: GraphFormat,
}

/// Heatmap rows: partners of `target` when set, otherwise entity
/// frequencies (optionally only in windows that also mention an entity of
/// `partner_type`).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HeatmapConfig {
    pub target: Option<String>,
    pub entity_type: Option<EntityType>,
    pub partner_type: Option<EntityType>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub min_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub filter: FilterConfig,
    pub embedding: EmbeddingConfig,
    pub dedup: DedupConfig,
    pub extract: ExtractConfig,
    pub external: ExternalConfig,
    pub associate: AssociateConfig,
    pub graph: GraphConfig,
    pub heatmap: HeatmapConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            out_dir: PathBuf::from("out"),
            filter: FilterConfig {
                strategy: FilterStrategy::Passthrough,
                phrases: None,
                query: None,
                threshold: DEFAULT_THRESHOLD,
                min_hits: DEFAULT_MIN_HITS,
            },
            embedding: EmbeddingConfig {
                provider: ProviderKind::HashedTf,
                dim: DEFAULT_DIM,
                url: None,
                timeout_ms: 30_000,
            },
            dedup: DedupConfig {
                enabled: true,
                grid_start: DEFAULT_GRID_START,
                grid_end: DEFAULT_GRID_END,
                grid_step: DEFAULT_GRID_STEP,
                threshold: None,
                max_batch: DEFAULT_MAX_BATCH,
            },
            extract: ExtractConfig {
                extractors: vec![ExtractorId::Gazetteer],
                registry: Vec::new(),
                categories: None,
                events: None,
            },
            external: ExternalConfig {
                url: None,
                confidence: 0.5,
                max_concurrency: 4,
                max_retries: 2,
                retry_backoff_ms: 200,
                timeout_ms: 30_000,
                type_map: Vec::new(),
            },
            associate: AssociateConfig {
                level: WindowLevel::Sentence,
                bucket: Bucketing::Year,
                example_refs: DEFAULT_EXAMPLE_REFS,
            },
            graph: GraphConfig {
                min_count: 1,
                format: GraphFormat::Json,
            },
            heatmap: HeatmapConfig {
                min_count: 1,
                ..HeatmapConfig::default()
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        message: e.to_string(),
    })
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn optional(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

impl PipelineConfig {
    /// Read and validate a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let config = PipelineConfig::parse(&text, base)?;
        config.validate()?;
        Ok(config)
    }

    /// Parse config text; relative paths resolve against `base`. Does not
    /// check that files exist.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = PipelineConfig {
            out_dir: base.join("out"),
            ..PipelineConfig::default()
        };
        let mut seen = BTreeSet::new();
        let path = |v: &str| base.join(v);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax { line });
            };
            let (key, v) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            match key {
                "corpus.path" => c.corpus = Some(path(v)),
                "output.dir" => c.out_dir = path(v),
                "filter.strategy" => c.filter.strategy = parse(key, v)?,
                "filter.phrases" => c.filter.phrases = Some(path(v)),
                "filter.query" => c.filter.query = optional(v),
                "filter.threshold" => c.filter.threshold = parse(key, v)?,
                "filter.min_hits" => c.filter.min_hits = parse(key, v)?,
                "embedding.provider" => c.embedding.provider = parse(key, v)?,
                "embedding.dim" => c.embedding.dim = parse(key, v)?,
                "embedding.url" => c.embedding.url = optional(v),
                "embedding.timeout_ms" => c.embedding.timeout_ms = parse(key, v)?,
                "dedup.enabled" => c.dedup.enabled = parse(key, v)?,
                "dedup.grid_start" => c.dedup.grid_start = parse(key, v)?,
                "dedup.grid_end" => c.dedup.grid_end = parse(key, v)?,
                "dedup.grid_step" => c.dedup.grid_step = parse(key, v)?,
                "dedup.threshold" => c.dedup.threshold = Some(parse(key, v)?),
                "dedup.max_batch" => c.dedup.max_batch = parse(key, v)?,
                "extract.extractors" => {
                    c.extract.extractors = list(v).map(|x| parse(key, x)).collect::<Result<_, _>>()?
                }
                "extract.registry" => c.extract.registry = list(v).map(path).collect(),
                "extract.categories" => c.extract.categories = Some(path(v)),
                "extract.events" => c.extract.events = Some(path(v)),
                "external.url" => c.external.url = optional(v),
                "external.confidence" => c.external.confidence = parse(key, v)?,
                "external.max_concurrency" => c.external.max_concurrency = parse(key, v)?,
                "external.max_retries" => c.external.max_retries = parse(key, v)?,
                "external.retry_backoff_ms" => c.external.retry_backoff_ms = parse(key, v)?,
                "external.timeout_ms" => c.external.timeout_ms = parse(key, v)?,
                "external.type_map" => {
                    c.external.type_map = list(v)
                        .map(|pair| {
                            let (label, ty) = pair.rsplit_once('=').ok_or_else(|| ConfigError::BadValue {
                                key: key.to_string(),
                                value: pair.to_string(),
                                message: "expected LABEL=TYPE".into(),
                            })?;
                            Ok((label.trim().to_string(), parse(key, ty.trim())?))
                        })
                        .collect::<Result<_, ConfigError>>()?
                }
                "associate.level" => c.associate.level = parse(key, v)?,
                "associate.bucket" => c.associate.bucket = parse(key, v)?,
                "associate.example_refs" => c.associate.example_refs = parse(key, v)?,
                "graph.min_count" => c.graph.min_count = parse(key, v)?,
                "graph.format" => c.graph.format = parse(key, v)?,
                "heatmap.target" => c.heatmap.target = optional(v),
                "heatmap.type" => c.heatmap.entity_type = Some(parse(key, v)?),
                "heatmap.partner_type" => c.heatmap.partner_type = Some(parse(key, v)?),
                "heatmap.from" => c.heatmap.from = optional(v),
                "heatmap.to" => c.heatmap.to = optional(v),
                "heatmap.min_count" => c.heatmap.min_count = parse(key, v)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(c)
    }

    /// Check value ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut files: Vec<(&str, &PathBuf)> = Vec::new();
        files.extend(self.corpus.iter().map(|p| ("corpus.path", p)));
        files.extend(self.filter.phrases.iter().map(|p| ("filter.phrases", p)));
        files.extend(self.extract.registry.iter().map(|p| ("extract.registry", p)));
        files.extend(self.extract.categories.iter().map(|p| ("extract.categories", p)));
        files.extend(self.extract.events.iter().map(|p| ("extract.events", p)));
        for (key, path) in files {
            if !path.is_file() {
                return Err(ConfigError::MissingFile {
                    key: key.to_string(),
                    path: path.clone(),
                });
            }
        }
        let bad = |key: &str, value: String, message: &str| ConfigError::BadValue {
            key: key.to_string(),
            value,
            message: message.to_string(),
        };
        if !(-1.0..=1.0).contains(&self.filter.threshold) {
            return Err(bad("filter.threshold", self.filter.threshold.to_string(), "must lie in [-1, 1]"));
        }
        if self.embedding.dim == 0 {
            return Err(bad("embedding.dim", "0".into(), "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.external.confidence) {
            return Err(bad("external.confidence", self.external.confidence.to_string(), "must lie in [0, 1]"));
        }
        if self.graph.min_count == 0 {
            return Err(bad("graph.min_count", "0".into(), "must be at least 1"));
        }
        if self.dedup.max_batch == 0 {
            return Err(bad("dedup.max_batch", "0".into(), "must be positive"));
        }
        match self.filter.strategy {
            FilterStrategy::Lexical if self.filter.phrases.is_none() => Err(ConfigError::Required {
                key: "filter.phrases",
                why: "the lexical filter needs a phrase file",
            }),
            FilterStrategy::Semantic if self.filter.query.is_none() => Err(ConfigError::Required {
                key: "filter.query",
                why: "the semantic filter needs a query",
            }),
            _ if self.embedding.provider == ProviderKind::Http && self.embedding.url.is_none() => {
                Err(ConfigError::Required {
                    key: "embedding.url",
                    why: "the http embedding provider needs an endpoint",
                })
            }
            _ if self.extract.extractors.contains(&ExtractorId::External) && self.external.url.is_none() => {
                Err(ConfigError::Required {
                    key: "external.url",
                    why: "the external extractor needs an annotator endpoint",
                })
            }
            _ => Ok(()),
        }
    }

    /// Phrase list from `filter.phrases`: one per line, blank lines and
    /// `#` comments ignored.
    pub fn read_phrases(&self) -> Result<Vec<String>, ConfigError> {
        let Some(path) = &self.filter.phrases else {
            return Ok(Vec::new());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect())
    }
}
