//! Client for an external entity annotation service speaking the
//! Spotlight-style wire format: form-encoded `text` and `confidence`, JSON
//! response with a `Resources` array.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{AnnotatedDoc, Span};

use super::{EntityRecord, EntityType, ExtractorId, Mention, Registry};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("annotator request failed after {attempts} attempts: {message}")]
    Http { attempts: u32, message: String },
    #[error("annotator response unreadable: {0}")]
    BadResponse(String),
    #[error("cannot build annotator thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct AnnotatorConfig {
    pub url: String,
    /// Sent as the `confidence` parameter and applied client-side to the
    /// returned similarity scores.
    pub confidence: f64,
    pub max_retries: u32,
    pub retry_backoff: Duration,
    pub timeout: Duration,
    pub max_concurrency: usize,
    /// Annotator type labels (e.g. `DBpedia:Company`) to entity types, in
    /// priority order.
    pub type_map: Vec<(String, EntityType)>,
}

impl AnnotatorConfig {
    pub fn new(url: impl Into<String>) -> Self {
        AnnotatorConfig {
            url: url.into(),
            confidence: 0.5,
            max_retries: 2,
            retry_backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(30),
            max_concurrency: 4,
            type_map: Vec::new(),
        }
    }
}

/// Mentions from one document plus registry rows created for URIs the
/// registry did not know.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotation {
    pub mentions: Vec<Mention>,
    pub new_records: Vec<EntityRecord>,
    /// Resources dropped for bad offsets or sentence-crossing spans.
    pub dropped: usize,
    /// The request failed and the document was skipped.
    pub skipped: bool,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(rename = "Resources", default)]
    resources: Vec<BTreeMap<String, Value>>,
}

fn scalar(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

pub struct ExternalAnnotator {
    config: AnnotatorConfig,
    registry: Registry,
    agent: ureq::Agent,
}

impl ExternalAnnotator {
    pub fn new(config: AnnotatorConfig, registry: Registry) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        ExternalAnnotator {
            config,
            registry,
            agent,
        }
    }

    pub fn config(&self) -> &AnnotatorConfig {
        &self.config
    }

    fn request(&self, text: &str) -> Result<String, ureq::Error> {
        let confidence = self.config.confidence.to_string();
        self.agent
            .post(&self.config.url)
            .header("Accept", "application/json")
            .send_form([("text", text), ("confidence", confidence.as_str())])?
            .body_mut()
            .read_to_string()
    }

    fn fetch(&self, text: &str) -> Result<String, AnnotateError> {
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.retry_backoff * 2u32.pow(attempt - 1));
            }
            match self.request(text) {
                Ok(body) => return Ok(body),
                Err(e) => {
                    log::debug!("annotator attempt {} failed: {}", attempt + 1, e);
                    last = e.to_string();
                }
            }
        }
        Err(AnnotateError::Http {
            attempts,
            message: last,
        })
    }

    /// Annotate one document, surfacing request failures.
    pub fn try_annotate(&self, doc: &AnnotatedDoc) -> Result<Annotation, AnnotateError> {
        if doc.body.trim().is_empty() {
            return Ok(Annotation::default());
        }
        let raw = self.fetch(&doc.body)?;
        let wire: WireResponse =
            serde_json::from_str(&raw).map_err(|e| AnnotateError::BadResponse(e.to_string()))?;
        Ok(self.to_mentions(doc, wire))
    }

    /// Annotate one document; on failure log a warning and return a skipped,
    /// empty annotation.
    pub fn annotate(&self, doc: &AnnotatedDoc) -> Annotation {
        self.try_annotate(doc).unwrap_or_else(|e| {
            log::warn!("{}: skipping external annotation: {}", doc.article_id, e);
            Annotation {
                skipped: true,
                ..Annotation::default()
            }
        })
    }

    /// Annotate many documents with at most `max_concurrency` requests in
    /// flight. Output order follows `docs`.
    pub fn annotate_all(&self, docs: &[AnnotatedDoc]) -> Result<Vec<Annotation>, AnnotateError> {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.max_concurrency.max(1))
            .build()
            .map_err(|e| AnnotateError::Pool(e.to_string()))?;
        Ok(pool.install(|| docs.par_iter().map(|d| self.annotate(d)).collect()))
    }

    fn entity_type(&self, types: Option<String>) -> EntityType {
        let types = types.unwrap_or_default();
        let labels: Vec<&str> = types.split(',').map(str::trim).collect();
        self.config
            .type_map
            .iter()
            .find(|(label, _)| labels.contains(&label.as_str()))
            .map_or(EntityType::Other, |(_, t)| *t)
    }

    fn to_mentions(&self, doc: &AnnotatedDoc, wire: WireResponse) -> Annotation {
        let mut out = Annotation::default();
        let mut created: BTreeMap<String, EntityRecord> = BTreeMap::new();
        for res in wire.resources {
            let (Some(uri), Some(surface), Some(offset), Some(score)) = (
                scalar(res.get("@URI")),
                scalar(res.get("@surfaceForm")),
                scalar(res.get("@offset")).and_then(|s| s.parse::<usize>().ok()),
                scalar(res.get("@similarityScore")).and_then(|s| s.parse::<f64>().ok()),
            ) else {
                log::warn!("{}: dropping incomplete annotator resource", doc.article_id);
                out.dropped += 1;
                continue;
            };
            if score < self.config.confidence {
                continue;
            }
            let Some(span) = locate(&doc.body, offset, &surface) else {
                log::warn!(
                    "{}: annotator offset {} for {:?} is out of bounds",
                    doc.article_id,
                    offset,
                    surface
                );
                out.dropped += 1;
                continue;
            };
            let (canonical_id, entity_type) = match self.registry.lookup_uri(&uri) {
                Some(rec) => (rec.canonical_id.clone(), rec.entity_type),
                None => {
                    let ty = self.entity_type(scalar(res.get("@types")));
                    let rec = created.entry(uri.clone()).or_insert_with(|| EntityRecord {
                        canonical_id: uri.clone(),
                        canonical_name: name_from_uri(&uri),
                        entity_type: ty,
                        aliases: Vec::new(),
                        uri: Some(uri.clone()),
                    });
                    if !rec.aliases.contains(&surface) {
                        rec.aliases.push(surface.clone());
                    }
                    (uri.clone(), rec.entity_type)
                }
            };
            match Mention::at(
                doc,
                span,
                canonical_id,
                entity_type,
                ExtractorId::External,
                score.clamp(0.0, 1.0),
            ) {
                Some(m) => out.mentions.push(m),
                None => out.dropped += 1,
            }
        }
        out.mentions.sort_by_key(|m| m.span);
        out.new_records = created.into_values().collect();
        out
    }
}

/// Map a character offset plus surface to a byte span, checking that the
/// body actually contains the surface there.
fn locate(body: &str, char_offset: usize, surface: &str) -> Option<Span> {
    let start = if char_offset == 0 {
        0
    } else {
        body.char_indices().nth(char_offset).map(|(b, _)| b)?
    };
    let end = start.checked_add(surface.len())?;
    (body.get(start..end)? == surface).then(|| Span::new(start, end))
}

fn name_from_uri(uri: &str) -> String {
    let tail = uri.trim_end_matches('/').rsplit('/').next().unwrap_or(uri);
    tail.replace('_', " ")
}

/// Annotate `doc` against the configured endpoint, dropping resources
/// scored below `confidence_threshold`.
pub fn annotate_external(
    client: &AnnotatorConfig,
    doc: &AnnotatedDoc,
    confidence_threshold: f64,
) -> Vec<Mention> {
    let config = AnnotatorConfig {
        confidence: confidence_threshold,
        ..client.clone()
    };
    ExternalAnnotator::new(config, Registry::default())
        .annotate(doc)
        .mentions
}
