//! Entity extraction: pluggable extractors, mention merging and
//! canonicalization against an entity registry.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_tokens, AnnotatedDoc, Span};

mod events;
mod external;
mod gazetteer;
mod pattern;

pub use events::{event_tag, EventLexicon, EventType};
pub use external::{
    annotate_external, AnnotateError, Annotation, AnnotatorConfig, ExternalAnnotator,
};
pub use gazetteer::{gazetteer_extract, Gazetteer};
pub use pattern::{default_categories, pattern_extract, PatternExtractor, ProductCategory};

pub const GAZETTEER_CONFIDENCE: f64 = 1.0;
pub const PATTERN_CONFIDENCE: f64 = 0.8;
pub const EVENT_CONFIDENCE: f64 = 0.6;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate canonical id {0:?}")]
    DuplicateId(String),
    #[error("alias {alias:?} maps to both {first:?} and {second:?}")]
    AliasConflict {
        alias: String,
        first: String,
        second: String,
    },
    #[error("uri {uri:?} maps to both {first:?} and {second:?}")]
    UriConflict {
        uri: String,
        first: String,
        second: String,
    },
    #[error("entity {0:?} has no usable alias")]
    NoAlias(String),
    #[error("product category {0:?} has no triggers")]
    EmptyCategory(String),
    #[error("unknown {kind} {value:?}")]
    Unknown { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Org,
    Product,
    Risk,
    Event,
    Person,
    Loc,
    Other,
}

impl EntityType {
    pub const ALL: [EntityType; 7] = [
        EntityType::Org,
        EntityType::Product,
        EntityType::Risk,
        EntityType::Event,
        EntityType::Person,
        EntityType::Loc,
        EntityType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Org => "ORG",
            EntityType::Product => "PRODUCT",
            EntityType::Risk => "RISK",
            EntityType::Event => "EVENT",
            EntityType::Person => "PERSON",
            EntityType::Loc => "LOC",
            EntityType::Other => "OTHER",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        EntityType::ALL
            .into_iter()
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| ExtractError::Unknown {
                kind: "entity type",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub canonical_id: String,
    pub canonical_name: String,
    pub entity_type: EntityType,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
}

/// Lookup key for aliases and surfaces: casefolded tokens joined by spaces.
pub fn alias_key(surface: &str) -> String {
    normalize_tokens(surface).join(" ")
}

/// Lowercased surface with whitespace runs collapsed to one space.
pub fn normalize_surface(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical entities with alias and URI indexes.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: Vec<EntityRecord>,
    by_id: HashMap<String, usize>,
    by_alias: HashMap<String, usize>,
    by_uri: HashMap<String, usize>,
}

impl Registry {
    /// Validate and index `records`. Every record's canonical name is added
    /// to its aliases.
    pub fn new(records: Vec<EntityRecord>) -> Result<Self, ExtractError> {
        let mut reg = Registry::default();
        for mut rec in records {
            if !rec.aliases.iter().any(|a| a == &rec.canonical_name) {
                rec.aliases.insert(0, rec.canonical_name.clone());
            }
            let idx = reg.records.len();
            if reg.by_id.insert(rec.canonical_id.clone(), idx).is_some() {
                return Err(ExtractError::DuplicateId(rec.canonical_id));
            }
            let mut usable = 0;
            for alias in &rec.aliases {
                let key = alias_key(alias);
                if key.is_empty() {
                    continue;
                }
                usable += 1;
                match reg.by_alias.get(&key) {
                    Some(&other) if other != idx => {
                        return Err(ExtractError::AliasConflict {
                            alias: alias.clone(),
                            first: reg.records[other].canonical_id.clone(),
                            second: rec.canonical_id.clone(),
                        })
                    }
                    _ => {
                        reg.by_alias.insert(key, idx);
                    }
                }
            }
            if usable == 0 {
                return Err(ExtractError::NoAlias(rec.canonical_id));
            }
            if let Some(uri) = &rec.uri {
                if let Some(&other) = reg.by_uri.get(uri) {
                    return Err(ExtractError::UriConflict {
                        uri: uri.clone(),
                        first: reg.records[other].canonical_id.clone(),
                        second: rec.canonical_id.clone(),
                    });
                }
                reg.by_uri.insert(uri.clone(), idx);
            }
            reg.records.push(rec);
        }
        Ok(reg)
    }

    /// Load one or more JSONL registry files, concatenated in order.
    pub fn load(paths: &[PathBuf]) -> Result<Self, ExtractError> {
        let mut records = Vec::new();
        for path in paths {
            records.extend(read_records(path)?);
        }
        Registry::new(records)
    }

    pub fn records(&self) -> &[EntityRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, canonical_id: &str) -> Option<&EntityRecord> {
        self.by_id.get(canonical_id).map(|&i| &self.records[i])
    }

    pub fn lookup_alias(&self, surface: &str) -> Option<&EntityRecord> {
        self.by_alias.get(&alias_key(surface)).map(|&i| &self.records[i])
    }

    pub fn lookup_uri(&self, uri: &str) -> Option<&EntityRecord> {
        self.by_uri.get(uri).map(|&i| &self.records[i])
    }
}

fn read_records(path: &Path) -> Result<Vec<EntityRecord>, ExtractError> {
    let text = fs::read_to_string(path).map_err(|source| ExtractError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| ExtractError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Resolve a surface to a canonical id: exact casefolded alias lookup, or
/// the normalized surface itself on a miss.
pub fn canonicalize(surface: &str, registry: &Registry) -> String {
    registry
        .lookup_alias(surface)
        .map(|r| r.canonical_id.clone())
        .unwrap_or_else(|| normalize_surface(surface))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ExtractorId {
    Gazetteer,
    Pattern,
    External,
    Event,
}

impl ExtractorId {
    /// Overlap priority; lower wins. Events never compete.
    fn priority(self) -> u8 {
        match self {
            ExtractorId::Gazetteer => 0,
            ExtractorId::External => 1,
            ExtractorId::Pattern => 2,
            ExtractorId::Event => 3,
        }
    }
}

impl FromStr for ExtractorId {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gazetteer" => Ok(ExtractorId::Gazetteer),
            "pattern" => Ok(ExtractorId::Pattern),
            "external" => Ok(ExtractorId::External),
            "event" | "events" => Ok(ExtractorId::Event),
            _ => Err(ExtractError::Unknown {
                kind: "extractor",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub article_id: String,
    pub span: Span,
    pub surface: String,
    pub canonical_id: String,
    pub entity_type: EntityType,
    pub extractor_id: ExtractorId,
    pub confidence: f64,
    pub sentence_index: usize,
    pub paragraph_index: usize,
}

impl Mention {
    /// Build a mention at `span`, or `None` (with a warning) when the span
    /// is not inside a single sentence.
    pub(crate) fn at(
        doc: &AnnotatedDoc,
        span: Span,
        canonical_id: String,
        entity_type: EntityType,
        extractor_id: ExtractorId,
        confidence: f64,
    ) -> Option<Mention> {
        let Some(sentence_index) = doc.sentence_containing(span) else {
            log::warn!(
                "{}: dropping {:?} mention at {}..{} crossing a sentence boundary",
                doc.article_id,
                extractor_id,
                span.start,
                span.end
            );
            return None;
        };
        Some(Mention {
            article_id: doc.article_id.clone(),
            span,
            surface: doc.slice(span).to_string(),
            canonical_id,
            entity_type,
            extractor_id,
            confidence,
            sentence_index,
            paragraph_index: doc.sentences[sentence_index].paragraph,
        })
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        (self.span.start, Reverse(self.span.end), self.extractor_id)
            .cmp(&(other.span.start, Reverse(other.span.end), other.extractor_id))
            .then_with(|| self.canonical_id.cmp(&other.canonical_id))
            .then_with(|| self.entity_type.cmp(&other.entity_type))
            .then_with(|| self.confidence.total_cmp(&other.confidence))
            .then_with(|| self.article_id.cmp(&other.article_id))
    }
}

/// Resolve overlapping spans: longest first, then leftmost. Survivors are
/// returned sorted by start.
pub(crate) fn longest_first<T>(mut items: Vec<(Span, T)>) -> Vec<(Span, T)> {
    items.sort_by_key(|(s, _)| (Reverse(s.len()), s.start));
    let mut kept: Vec<(Span, T)> = Vec::with_capacity(items.len());
    for (span, item) in items {
        if kept.iter().all(|(k, _)| !k.overlaps(&span)) {
            kept.push((span, item));
        }
    }
    kept.sort_by_key(|(s, _)| s.start);
    kept
}

/// Merge mentions of one document from several extractors. Overlaps among
/// non-event mentions resolve by extractor priority (gazetteer, external,
/// pattern), then longer span, then lower start. Event mentions always
/// survive. Output is sorted by start.
pub fn merge_mentions(per_extractor: Vec<Vec<Mention>>) -> Vec<Mention> {
    let (mut events, mut entities): (Vec<Mention>, Vec<Mention>) = per_extractor
        .into_iter()
        .flatten()
        .partition(|m| m.extractor_id == ExtractorId::Event);
    entities.sort_by(|a, b| {
        (a.extractor_id.priority(), Reverse(a.span.len()), a.span.start)
            .cmp(&(b.extractor_id.priority(), Reverse(b.span.len()), b.span.start))
            .then_with(|| a.total_cmp(b))
    });
    let mut kept: Vec<Mention> = Vec::with_capacity(entities.len());
    for m in entities {
        if kept.iter().all(|k| !k.span.overlaps(&m.span)) {
            kept.push(m);
        }
    }
    kept.append(&mut events);
    kept.sort_by(Mention::total_cmp);
    kept.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal && a.surface == b.surface);
    kept
}

/// Entity names, types and document frequencies gathered from a registry
/// and extracted mentions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityCatalog {
    pub entries: BTreeMap<String, CatalogEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub label: String,
    pub entity_type: EntityType,
    pub doc_count: usize,
}

impl EntityCatalog {
    /// Registry records take precedence for labels and types; entities only
    /// seen in mentions are labelled by their canonical id and typed by
    /// their first mention in (article, start) order.
    pub fn build(registry: &Registry, mentions: &[Mention]) -> Self {
        let mut entries: BTreeMap<String, CatalogEntry> = BTreeMap::new();
        let mut docs: BTreeMap<&str, std::collections::BTreeSet<&str>> = BTreeMap::new();
        let mut sorted: Vec<&Mention> = mentions.iter().collect();
        sorted.sort_by(|a, b| (&a.article_id, a.span.start).cmp(&(&b.article_id, b.span.start)));
        for m in sorted {
            docs.entry(&m.canonical_id).or_default().insert(&m.article_id);
            entries.entry(m.canonical_id.clone()).or_insert_with(|| {
                match registry.get(&m.canonical_id) {
                    Some(r) => CatalogEntry {
                        label: r.canonical_name.clone(),
                        entity_type: r.entity_type,
                        doc_count: 0,
                    },
                    None => CatalogEntry {
                        label: m.canonical_id.clone(),
                        entity_type: m.entity_type,
                        doc_count: 0,
                    },
                }
            });
        }
        for (id, set) in docs {
            if let Some(e) = entries.get_mut(id) {
                e.doc_count = set.len();
            }
        }
        EntityCatalog { entries }
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.get(id)
    }

    pub fn label<'a>(&'a self, id: &'a str) -> &'a str {
        self.entries.get(id).map_or(id, |e| e.label.as_str())
    }

    pub fn entity_type(&self, id: &str) -> Option<EntityType> {
        self.entries.get(id).map(|e| e.entity_type)
    }

    /// Find an entity by canonical id, then by label (case-insensitive).
    pub fn resolve(&self, name: &str) -> Option<&str> {
        if let Some((id, _)) = self.entries.get_key_value(name) {
            return Some(id.as_str());
        }
        let key = normalize_surface(name);
        self.entries
            .iter()
            .find(|(id, e)| normalize_surface(&e.label) == key || id.as_str() == key)
            .map(|(id, _)| id.as_str())
    }
}
