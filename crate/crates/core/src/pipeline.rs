//! Config-driven stage runner.
//!
//! Stages run in a fixed order, each reading its predecessor's artifact from
//! the output directory and writing its own. `manifest.json` records, per
//! stage, the artifact's content hash and a fingerprint of the config that
//! produced it; a stage refuses missing or stale upstream artifacts unless
//! forced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::associate::{
    count_pairs_with, entity_trend, pair_trend, AssociateError, BucketRange, CoocRecord,
    MentionedDoc, TrendFilter, TrendMatrix,
};
use crate::config::{ConfigError, HeatmapConfig, PipelineConfig, ProviderKind};
use crate::corpus::{load_corpus, Article, CorpusError, Segmenter};
use crate::dedup::{dedupe, threshold_grid, Cluster, DedupError, DedupOutcome, DedupReport, DedupSettings};
use crate::embed::{EmbedError, EmbeddingProvider, HashedTf, HttpProvider};
use crate::extract::{
    merge_mentions, AnnotateError, AnnotatorConfig, EntityCatalog, EventLexicon, ExternalAnnotator,
    ExtractError, ExtractorId, Gazetteer, Mention, PatternExtractor, ProductCategory, Registry,
    default_categories, CatalogEntry,
};
use crate::filter::{
    compile_phrases, lexical_filter_all, semantic_filter_all, FilterError, FilterStrategy,
    LexicalResult, PhraseHits, SemanticFilter,
};
use crate::graph::{build_graph, export_graph, export_heatmap, CoocGraph, GraphError};

pub const MANIFEST: &str = "manifest.json";
pub const ENTITIES: &str = "entities.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Filter,
    Dedupe,
    Extract,
    Associate,
    Graph,
    Heatmap,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Filter,
        Stage::Dedupe,
        Stage::Extract,
        Stage::Associate,
        Stage::Graph,
        Stage::Heatmap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::Dedupe => "dedupe",
            Stage::Extract => "extract",
            Stage::Associate => "associate",
            Stage::Graph => "graph",
            Stage::Heatmap => "heatmap",
        }
    }

    pub fn upstream(self) -> Option<Stage> {
        match self {
            Stage::Ingest => None,
            Stage::Filter => Some(Stage::Ingest),
            Stage::Dedupe => Some(Stage::Filter),
            Stage::Extract => Some(Stage::Dedupe),
            Stage::Associate => Some(Stage::Extract),
            Stage::Graph | Stage::Heatmap => Some(Stage::Associate),
        }
    }

    /// Artifact file name inside the output directory.
    pub fn artifact(self, config: &PipelineConfig) -> String {
        match self {
            Stage::Ingest => "articles.jsonl".into(),
            Stage::Filter => "filtered.jsonl".into(),
            Stage::Dedupe => "dedup.json".into(),
            Stage::Extract => "mentions.jsonl".into(),
            Stage::Associate => "pairs.jsonl".into(),
            Stage::Graph => format!("graph.{}", config.graph.format.extension()),
            Stage::Heatmap => "heatmap.csv".into(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Parse a comma-separated stage list; `all` selects every stage.
pub fn parse_stages(s: &str) -> Result<Vec<Stage>, String> {
    if s.trim() == "all" {
        return Ok(Stage::ALL.to_vec());
    }
    let set = s
        .split(',')
        .map(str::parse)
        .collect::<Result<BTreeSet<Stage>, _>>()?;
    Ok(set.into_iter().collect())
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` needs the `{needs}` artifact {path}; run `{needs}` first")]
    MissingUpstream {
        stage: Stage,
        needs: Stage,
        path: PathBuf,
    },
    #[error("stage `{stage}`: the `{upstream}` artifact is stale ({reason}); rerun `{upstream}` or pass --force")]
    Stale {
        stage: Stage,
        upstream: Stage,
        reason: &'static str,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Dedup(#[from] DedupError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Associate(#[from] AssociateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

impl PipelineError {
    /// 1 for configuration and dependency problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::MissingUpstream { .. }
            | PipelineError::Stale { .. }
            | PipelineError::Invalid(_) => 1,
            _ => 2,
        }
    }
}

type Result<T, E = PipelineError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageArtifact {
    pub stage: Stage,
    pub path: String,
    pub sha256: String,
    pub config_fingerprint: String,
    /// Secondary files written by the stage, name to hash.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

pub type Manifest = BTreeMap<Stage, StageArtifact>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSummary {
    pub stage: Stage,
    pub items_in: usize,
    pub items_out: usize,
    pub elapsed: Duration,
}

impl fmt::Display for StageSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] in={} out={} time={}ms",
            self.stage,
            self.items_in,
            self.items_out,
            self.elapsed.as_millis()
        )
    }
}

/// One line of `filtered.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub article_id: String,
    pub kept: bool,
    pub score: f64,
    pub strategy: FilterStrategy,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hits: BTreeMap<String, PhraseHits>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub force: bool,
    /// Echo stage summaries to standard error.
    pub verbose_summaries: bool,
    /// Extra copy destinations for the graph and heatmap artifacts.
    pub graph_out: Option<PathBuf>,
    pub heatmap_out: Option<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("artifact rows serialize");
        out.push(b'\n');
    }
    out
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("artifact serializes");
    out.push(b'\n');
    out
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| PipelineError::Artifact {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn file_hash(path: &Path) -> Option<String> {
    fs::read(path).ok().map(|b| sha256_hex(&b))
}

pub struct Pipeline {
    config: PipelineConfig,
    options: RunOptions,
    segmenter: Segmenter,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Self {
        Pipeline {
            config,
            options,
            segmenter: Segmenter::default(),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn artifact_path(&self, stage: Stage) -> PathBuf {
        self.config.out_dir.join(stage.artifact(&self.config))
    }

    /// Run `stages` in pipeline order inside a pool of the configured size.
    pub fn run(&self, stages: &[Stage]) -> Result<Vec<StageSummary>> {
        let mut ordered: Vec<Stage> = stages.to_vec();
        ordered.sort();
        ordered.dedup();
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.options.threads {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
        pool.install(|| {
            let mut summaries = Vec::new();
            for stage in ordered {
                let summary = self.run_stage(stage)?;
                if self.options.verbose_summaries {
                    eprintln!("{summary}");
                }
                summaries.push(summary);
            }
            Ok(summaries)
        })
    }

    fn run_stage(&self, stage: Stage) -> Result<StageSummary> {
        let started = Instant::now();
        if let Some(up) = stage.upstream() {
            self.check_upstream(stage, up)?;
        }
        let (items_in, items_out, extra) = match stage {
            Stage::Ingest => self.ingest()?,
            Stage::Filter => self.filter()?,
            Stage::Dedupe => self.dedupe()?,
            Stage::Extract => self.extract()?,
            Stage::Associate => self.associate()?,
            Stage::Graph => self.graph()?,
            Stage::Heatmap => self.heatmap()?,
        };
        self.record(stage, extra)?;
        Ok(StageSummary {
            stage,
            items_in,
            items_out,
            elapsed: started.elapsed(),
        })
    }

    pub fn read_manifest(&self) -> Result<Manifest> {
        let path = self.config.out_dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::new());
        }
        read_json(&path)
    }

    fn record(&self, stage: Stage, extra: Vec<String>) -> Result<()> {
        let mut manifest = self.read_manifest()?;
        let path = self.artifact_path(stage);
        let sha256 = file_hash(&path).ok_or_else(|| PipelineError::Artifact {
            path: path.clone(),
            message: "artifact was not written".into(),
        })?;
        let extra = extra
            .into_iter()
            .map(|name| {
                let h = file_hash(&self.config.out_dir.join(&name)).unwrap_or_default();
                (name, h)
            })
            .collect();
        manifest.insert(
            stage,
            StageArtifact {
                stage,
                path: stage.artifact(&self.config),
                sha256,
                config_fingerprint: self.fingerprint(stage),
                extra,
            },
        );
        write_file(&self.config.out_dir.join(MANIFEST), &pretty(&manifest))
    }

    fn check_upstream(&self, stage: Stage, up: Stage) -> Result<()> {
        let path = self.artifact_path(up);
        let manifest = self.read_manifest()?;
        let missing = || PipelineError::MissingUpstream {
            stage,
            needs: up,
            path: path.clone(),
        };
        if !path.exists() {
            return Err(missing());
        }
        if self.options.force {
            return Ok(());
        }
        let entry = manifest.get(&up).ok_or_else(missing)?;
        if file_hash(&path).as_deref() != Some(entry.sha256.as_str()) {
            return Err(PipelineError::Stale {
                stage,
                upstream: up,
                reason: "artifact changed since it was written",
            });
        }
        for (name, hash) in &entry.extra {
            if file_hash(&self.config.out_dir.join(name)).as_deref() != Some(hash.as_str()) {
                return Err(PipelineError::Stale {
                    stage,
                    upstream: up,
                    reason: "a companion file changed since it was written",
                });
            }
        }
        if entry.config_fingerprint != self.fingerprint(up) {
            return Err(PipelineError::Stale {
                stage,
                upstream: up,
                reason: "produced under a different configuration",
            });
        }
        Ok(())
    }

    /// Hash of the config sections `stage` depends on, chained with its
    /// upstream's fingerprint, plus the contents of referenced files.
    pub fn fingerprint(&self, stage: Stage) -> String {
        let c = &self.config;
        let mut h = Sha256::new();
        if let Some(up) = stage.upstream() {
            h.update(self.fingerprint(up).as_bytes());
        }
        let mut files: Vec<&PathBuf> = Vec::new();
        let section = match stage {
            Stage::Ingest => {
                files.extend(&c.corpus);
                serde_json::to_string(&c.corpus)
            }
            Stage::Filter => {
                files.extend(&c.filter.phrases);
                serde_json::to_string(&(&c.filter, &c.embedding))
            }
            Stage::Dedupe => serde_json::to_string(&(&c.dedup, &c.embedding)),
            Stage::Extract => {
                files.extend(&c.extract.registry);
                files.extend(&c.extract.categories);
                files.extend(&c.extract.events);
                serde_json::to_string(&(&c.extract, &c.external))
            }
            Stage::Associate => serde_json::to_string(&c.associate),
            Stage::Graph => serde_json::to_string(&c.graph),
            Stage::Heatmap => serde_json::to_string(&c.heatmap),
        }
        .expect("config serializes");
        h.update(stage.name().as_bytes());
        h.update(section.as_bytes());
        for f in files {
            h.update(fs::read(f).unwrap_or_default());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn provider(&self) -> Box<dyn EmbeddingProvider> {
        let e = &self.config.embedding;
        match e.provider {
            ProviderKind::HashedTf => Box::new(HashedTf::new(e.dim)),
            ProviderKind::Http => Box::new(HttpProvider::new(
                e.url.clone().unwrap_or_default(),
                e.dim,
                Duration::from_millis(e.timeout_ms),
            )),
        }
    }

    // ---- artifact readers ----

    pub fn read_articles(&self) -> Result<Vec<Article>> {
        read_jsonl(&self.artifact_path(Stage::Ingest))
    }

    pub fn read_filtered(&self) -> Result<Vec<FilterRecord>> {
        read_jsonl(&self.artifact_path(Stage::Filter))
    }

    pub fn read_dedup(&self) -> Result<DedupOutcome> {
        read_json(&self.artifact_path(Stage::Dedupe))
    }

    pub fn read_mentions(&self) -> Result<Vec<Mention>> {
        read_jsonl(&self.artifact_path(Stage::Extract))
    }

    pub fn read_catalog(&self) -> Result<EntityCatalog> {
        read_json(&self.config.out_dir.join(ENTITIES))
    }

    pub fn read_pairs(&self) -> Result<Vec<CoocRecord>> {
        read_jsonl(&self.artifact_path(Stage::Associate))
    }

    /// Articles surviving filtering and deduplication, in corpus order.
    fn working_set(&self) -> Result<Vec<Article>> {
        let kept: BTreeSet<String> = self.read_dedup()?.kept_ids().into_iter().collect();
        Ok(self
            .read_articles()?
            .into_iter()
            .filter(|a| kept.contains(&a.id))
            .collect())
    }

    /// Working-set articles paired with their mentions and keyword hits.
    pub fn mentioned_docs(&self) -> Result<Vec<MentionedDoc>> {
        let articles = self.working_set()?;
        let mut by_article: BTreeMap<String, Vec<Mention>> = BTreeMap::new();
        for m in self.read_mentions()? {
            by_article.entry(m.article_id.clone()).or_default().push(m);
        }
        let hits: BTreeMap<String, BTreeMap<String, PhraseHits>> = match self.read_filtered() {
            Ok(rows) => rows
                .into_iter()
                .filter(|r| !r.hits.is_empty())
                .map(|r| (r.article_id, r.hits))
                .collect(),
            Err(_) => BTreeMap::new(),
        };
        Ok(articles
            .par_iter()
            .map(|a| {
                let doc = self.segmenter.segment(a);
                let lexical = hits.get(&a.id).map(|h| LexicalResult {
                    article_id: a.id.clone(),
                    hits: h.clone(),
                });
                let mentions = by_article.get(&a.id).cloned().unwrap_or_default();
                MentionedDoc::new(&doc, a.published_at, mentions, lexical.as_ref())
            })
            .collect())
    }

    // ---- stages ----

    fn ingest(&self) -> Result<(usize, usize, Vec<String>)> {
        let corpus = self.config.corpus.as_ref().ok_or(ConfigError::Required {
            key: "corpus.path",
            why: "ingest needs a corpus",
        })?;
        let (articles, summary) = load_corpus(corpus)?;
        write_file(&self.artifact_path(Stage::Ingest), &jsonl(&articles))?;
        Ok((summary.loaded + summary.skipped, summary.loaded, Vec::new()))
    }

    fn filter(&self) -> Result<(usize, usize, Vec<String>)> {
        let articles = self.read_articles()?;
        let f = &self.config.filter;
        let mut rows: Vec<FilterRecord> = match f.strategy {
            FilterStrategy::Lexical => {
                let phrases = self.config.read_phrases()?;
                let matcher = compile_phrases(&phrases)?;
                let docs: Vec<_> = articles.par_iter().map(|a| self.segmenter.segment(a)).collect();
                lexical_filter_all(&docs, &matcher, f.min_hits)
                    .into_iter()
                    .map(|(lr, d)| FilterRecord {
                        article_id: d.article_id,
                        kept: d.kept,
                        score: d.score,
                        strategy: d.strategy,
                        hits: lr.hits,
                    })
                    .collect()
            }
            FilterStrategy::Semantic => {
                let query = f.query.as_deref().ok_or(ConfigError::Required {
                    key: "filter.query",
                    why: "the semantic filter needs a query",
                })?;
                let provider = self.provider();
                let sf = SemanticFilter::new(provider.as_ref(), query, f.threshold)?;
                semantic_filter_all(&articles, &sf)?
                    .into_iter()
                    .map(|d| FilterRecord {
                        article_id: d.article_id,
                        kept: d.kept,
                        score: d.score,
                        strategy: d.strategy,
                        hits: BTreeMap::new(),
                    })
                    .collect()
            }
            FilterStrategy::Passthrough => articles
                .iter()
                .map(|a| FilterRecord {
                    article_id: a.id.clone(),
                    kept: true,
                    score: 1.0,
                    strategy: FilterStrategy::Passthrough,
                    hits: BTreeMap::new(),
                })
                .collect(),
        };
        rows.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        let kept = rows.iter().filter(|r| r.kept).count();
        write_file(&self.artifact_path(Stage::Filter), &jsonl(&rows))?;
        Ok((articles.len(), kept, Vec::new()))
    }

    fn dedupe(&self) -> Result<(usize, usize, Vec<String>)> {
        let kept: BTreeSet<String> = self
            .read_filtered()?
            .into_iter()
            .filter(|r| r.kept)
            .map(|r| r.article_id)
            .collect();
        let articles: Vec<Article> = self
            .read_articles()?
            .into_iter()
            .filter(|a| kept.contains(&a.id))
            .collect();
        let d = &self.config.dedup;
        let outcome = if d.enabled {
            let settings = DedupSettings {
                grid: threshold_grid(d.grid_start, d.grid_end, d.grid_step)?,
                fixed_threshold: d.threshold,
                max_batch: d.max_batch,
            };
            dedupe(&articles, self.provider().as_ref(), &settings)?
        } else {
            DedupOutcome {
                batches: vec![DedupReport {
                    threshold: 0.0,
                    silhouette: None,
                    clusters: articles
                        .iter()
                        .map(|a| Cluster {
                            representative: a.id.clone(),
                            members: vec![a.id.clone()],
                        })
                        .collect(),
                }],
            }
        };
        write_file(&self.artifact_path(Stage::Dedupe), &pretty(&outcome))?;
        Ok((articles.len(), outcome.kept_ids().len(), Vec::new()))
    }

    fn extract(&self) -> Result<(usize, usize, Vec<String>)> {
        let x = &self.config.extract;
        let registry = Registry::load(&x.registry)?;
        let articles = self.working_set()?;
        let docs: Vec<_> = articles.par_iter().map(|a| self.segmenter.segment(a)).collect();

        let mut per_doc: Vec<Vec<Vec<Mention>>> = vec![Vec::new(); docs.len()];
        let mut new_records = Vec::new();
        for ext in &x.extractors {
            let found: Vec<Vec<Mention>> = match ext {
                ExtractorId::Gazetteer => {
                    let g = Gazetteer::new(&registry);
                    docs.par_iter().map(|d| g.extract(d)).collect()
                }
                ExtractorId::Pattern => {
                    let categories: Vec<ProductCategory> = match &x.categories {
                        Some(path) => read_json(path)?,
                        None => default_categories(),
                    };
                    let p = PatternExtractor::new(&categories, registry.clone())?;
                    docs.par_iter().map(|d| p.extract(d)).collect()
                }
                ExtractorId::Event => {
                    let lex = match &x.events {
                        Some(path) => EventLexicon::load(path)?,
                        None => EventLexicon::default(),
                    };
                    docs.par_iter().map(|d| lex.tag(d)).collect()
                }
                ExtractorId::External => {
                    let e = &self.config.external;
                    let config = AnnotatorConfig {
                        url: e.url.clone().unwrap_or_default(),
                        confidence: e.confidence,
                        max_retries: e.max_retries,
                        retry_backoff: Duration::from_millis(e.retry_backoff_ms),
                        timeout: Duration::from_millis(e.timeout_ms),
                        max_concurrency: e.max_concurrency,
                        type_map: e.type_map.clone(),
                    };
                    let annotations = ExternalAnnotator::new(config, registry.clone()).annotate_all(&docs)?;
                    let skipped = annotations.iter().filter(|a| a.skipped).count();
                    if skipped > 0 {
                        log::warn!("external annotator skipped {skipped} of {} documents", docs.len());
                    }
                    annotations
                        .into_iter()
                        .map(|a| {
                            new_records.extend(a.new_records);
                            a.mentions
                        })
                        .collect()
                }
            };
            for (slot, ms) in per_doc.iter_mut().zip(found) {
                slot.push(ms);
            }
        }
        let mut mentions: Vec<Mention> = per_doc.into_par_iter().flat_map(merge_mentions).collect();
        mentions.sort_by(|a, b| {
            (&a.article_id, a.span.start, a.span.end).cmp(&(&b.article_id, b.span.start, b.span.end))
        });
        let mut catalog = EntityCatalog::build(&registry, &mentions);
        new_records.sort_by(|a, b| a.canonical_id.cmp(&b.canonical_id));
        for rec in new_records {
            if let Some(entry) = catalog.entries.get_mut(&rec.canonical_id) {
                if entry.label == rec.canonical_id {
                    *entry = CatalogEntry {
                        label: rec.canonical_name,
                        ..entry.clone()
                    };
                }
            }
        }
        write_file(&self.artifact_path(Stage::Extract), &jsonl(&mentions))?;
        write_file(&self.config.out_dir.join(ENTITIES), &pretty(&catalog))?;
        Ok((docs.len(), mentions.len(), vec![ENTITIES.to_string()]))
    }

    fn associate(&self) -> Result<(usize, usize, Vec<String>)> {
        let docs = self.mentioned_docs()?;
        let a = &self.config.associate;
        let records = count_pairs_with(&docs, a.level, a.bucket, a.example_refs)?;
        write_file(&self.artifact_path(Stage::Associate), &jsonl(&records))?;
        Ok((docs.len(), records.len(), Vec::new()))
    }

    /// Graph built from the current pair artifact and entity catalog.
    pub fn load_graph(&self) -> Result<CoocGraph> {
        let records = self.read_pairs()?;
        let catalog = self.read_catalog()?;
        let mut g = build_graph(&records, &catalog, self.config.graph.min_count)?;
        g.meta.window = Some(self.config.associate.level);
        g.meta.bucketing = Some(self.config.associate.bucket);
        g.meta.corpus_fingerprint = file_hash(&self.artifact_path(Stage::Ingest));
        Ok(g)
    }

    fn graph(&self) -> Result<(usize, usize, Vec<String>)> {
        let g = self.load_graph()?;
        let bytes = export_graph(&g, self.config.graph.format)?;
        write_file(&self.artifact_path(Stage::Graph), &bytes)?;
        if let Some(out) = &self.options.graph_out {
            write_file(out, &bytes)?;
        }
        Ok((self.read_pairs()?.len(), g.edges.len(), Vec::new()))
    }

    /// Trend matrix for `h`: partners of `h.target` when set, entity
    /// frequencies otherwise.
    pub fn trend(&self, h: &HeatmapConfig) -> Result<TrendMatrix> {
        let catalog = self.read_catalog()?;
        let filter = TrendFilter {
            entity_type: h.entity_type,
            buckets: BucketRange {
                from: h.from.clone(),
                to: h.to.clone(),
            },
            window: None,
            min_count: h.min_count,
        };
        match &h.target {
            Some(target) => {
                let Some(id) = catalog.resolve(target).map(str::to_string) else {
                    log::warn!("unknown target entity {target:?}");
                    return Ok(TrendMatrix::default());
                };
                Ok(pair_trend(&self.read_pairs()?, &id, &filter, &catalog))
            }
            None => {
                let a = &self.config.associate;
                Ok(entity_trend(
                    &self.mentioned_docs()?,
                    a.level,
                    a.bucket,
                    &filter,
                    h.partner_type,
                    &catalog,
                )?)
            }
        }
    }

    fn heatmap(&self) -> Result<(usize, usize, Vec<String>)> {
        let m = self.trend(&self.config.heatmap)?;
        let bytes = export_heatmap(&m)?;
        write_file(&self.artifact_path(Stage::Heatmap), &bytes)?;
        if let Some(out) = &self.options.heatmap_out {
            write_file(out, &bytes)?;
        }
        Ok((self.read_catalog()?.entries.len(), m.rows.len(), Vec::new()))
    }
}

/// Validate `config` and run `stages`.
pub fn run_pipeline(
    config: PipelineConfig,
    stages: &[Stage],
    options: RunOptions,
) -> Result<Vec<StageSummary>> {
    config.validate()?;
    Pipeline::new(config, options).run(stages)
}
