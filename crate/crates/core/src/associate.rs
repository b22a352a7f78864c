//! Windowed entity co-occurrence counting, trend matrices and ranking.
//!
//! Each window unit (sentence, paragraph or article) contributes the set of
//! distinct canonical ids mentioned in it; every unordered pair from that set
//! is counted once. Counts are raw, with no normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AnnotatedDoc;
use crate::extract::{EntityCatalog, EntityType, Mention};
use crate::filter::LexicalResult;

pub const UNKNOWN_BUCKET: &str = "unknown";
pub const DEFAULT_EXAMPLE_REFS: usize = 5;

#[derive(Debug, Error)]
pub enum AssociateError {
    #[error("{article_id}: mention {canonical_id:?} references {level} {index} but the article has {available}")]
    BadWindow {
        article_id: String,
        canonical_id: String,
        level: WindowLevel,
        index: usize,
        available: usize,
    },
    #[error("unknown {kind} {value:?}")]
    Unknown { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowLevel {
    Sentence,
    Paragraph,
    Article,
}

impl WindowLevel {
    pub const ALL: [WindowLevel; 3] = [
        WindowLevel::Sentence,
        WindowLevel::Paragraph,
        WindowLevel::Article,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WindowLevel::Sentence => "sentence",
            WindowLevel::Paragraph => "paragraph",
            WindowLevel::Article => "article",
        }
    }
}

impl fmt::Display for WindowLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WindowLevel {
    type Err = AssociateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WindowLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| AssociateError::Unknown {
                kind: "window level",
                value: s.to_string(),
            })
    }
}

/// Time bucket granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucketing {
    Year,
    Month,
    /// Single `all` bucket for dated articles.
    None,
}

impl Bucketing {
    pub fn label(self, date: Option<NaiveDate>) -> String {
        match (self, date) {
            (_, None) => UNKNOWN_BUCKET.to_string(),
            (Bucketing::Year, Some(d)) => format!("{:04}", d.year()),
            (Bucketing::Month, Some(d)) => format!("{:04}-{:02}", d.year(), d.month()),
            (Bucketing::None, Some(_)) => "all".to_string(),
        }
    }
}

impl FromStr for Bucketing {
    type Err = AssociateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "year" => Ok(Bucketing::Year),
            "month" => Ok(Bucketing::Month),
            "none" => Ok(Bucketing::None),
            _ => Err(AssociateError::Unknown {
                kind: "bucketing",
                value: s.to_string(),
            }),
        }
    }
}

/// Ascending bucket order with `unknown` last.
pub fn bucket_order(a: &str, b: &str) -> std::cmp::Ordering {
    (a == UNKNOWN_BUCKET, a).cmp(&(b == UNKNOWN_BUCKET, b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordHit {
    pub phrase: String,
    pub sentence_index: usize,
    pub paragraph_index: usize,
}

/// An article's merged mentions together with what counting needs from its
/// segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionedDoc {
    pub article_id: String,
    pub published_at: Option<NaiveDate>,
    pub sentence_count: usize,
    pub paragraph_count: usize,
    pub mentions: Vec<Mention>,
    pub keyword_hits: Vec<KeywordHit>,
}

impl MentionedDoc {
    pub fn new(
        doc: &AnnotatedDoc,
        published_at: Option<NaiveDate>,
        mentions: Vec<Mention>,
        lexical: Option<&LexicalResult>,
    ) -> Self {
        let keyword_hits = lexical
            .into_iter()
            .flat_map(|lr| lr.hits.iter())
            .flat_map(|(phrase, hits)| {
                hits.offsets.iter().filter_map(move |span| {
                    let s = doc.sentence_containing(crate::corpus::Span::new(span.start, span.start))
                        .or_else(|| doc.sentence_containing(*span))?;
                    Some(KeywordHit {
                        phrase: phrase.clone(),
                        sentence_index: s,
                        paragraph_index: doc.sentences[s].paragraph,
                    })
                })
            })
            .collect();
        MentionedDoc {
            article_id: doc.article_id.clone(),
            published_at,
            sentence_count: doc.sentences.len(),
            paragraph_count: doc.paragraphs.len(),
            mentions,
            keyword_hits,
        }
    }

    fn window_of(&self, level: WindowLevel, sentence: usize, paragraph: usize) -> usize {
        match level {
            WindowLevel::Sentence => sentence,
            WindowLevel::Paragraph => paragraph,
            WindowLevel::Article => 0,
        }
    }

    /// Distinct canonical ids per window unit, keyed by window index.
    pub fn window_sets(
        &self,
        level: WindowLevel,
    ) -> Result<BTreeMap<usize, BTreeSet<&str>>, AssociateError> {
        let mut units: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
        for m in &self.mentions {
            let (index, available) = match level {
                WindowLevel::Sentence => (m.sentence_index, self.sentence_count),
                WindowLevel::Paragraph => (m.paragraph_index, self.paragraph_count),
                WindowLevel::Article => (0, 1),
            };
            if index >= available {
                return Err(AssociateError::BadWindow {
                    article_id: self.article_id.clone(),
                    canonical_id: m.canonical_id.clone(),
                    level,
                    index,
                    available,
                });
            }
            units.entry(index).or_default().insert(m.canonical_id.as_str());
        }
        Ok(units)
    }

    fn keywords_in(&self, level: WindowLevel, index: usize) -> impl Iterator<Item = &str> {
        self.keyword_hits
            .iter()
            .filter(move |k| self.window_of(level, k.sentence_index, k.paragraph_index) == index)
            .map(|k| k.phrase.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExampleRef(pub String, pub usize);

/// Undirected pair count for one window level and time bucket. `pair.0 <
/// pair.1` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoocRecord {
    pub pair: (String, String),
    pub window: WindowLevel,
    pub bucket: String,
    pub count: u64,
    pub keywords: BTreeSet<String>,
    pub example_refs: Vec<ExampleRef>,
}

impl CoocRecord {
    pub fn involves(&self, id: &str) -> bool {
        self.pair.0 == id || self.pair.1 == id
    }

    pub fn partner_of(&self, id: &str) -> Option<&str> {
        if self.pair.0 == id {
            Some(&self.pair.1)
        } else if self.pair.1 == id {
            Some(&self.pair.0)
        } else {
            None
        }
    }
}

/// Order a pair canonically.
pub fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct PairAcc {
    count: u64,
    keywords: BTreeSet<String>,
    examples: BTreeSet<ExampleRef>,
}

/// Mergeable partial pair counts. Merging is associative and commutative;
/// example refs keep the smallest `limit` by (article id, window index).
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounter {
    level: WindowLevel,
    bucketing: Bucketing,
    limit: usize,
    counts: BTreeMap<(String, String, String), PairAcc>,
}

impl PairCounter {
    pub fn new(level: WindowLevel, bucketing: Bucketing, example_limit: usize) -> Self {
        PairCounter {
            level,
            bucketing,
            limit: example_limit,
            counts: BTreeMap::new(),
        }
    }

    pub fn add_doc(&mut self, doc: &MentionedDoc) -> Result<(), AssociateError> {
        let bucket = self.bucketing.label(doc.published_at);
        for (index, ids) in doc.window_sets(self.level)? {
            if ids.len() < 2 {
                continue;
            }
            let keywords: BTreeSet<&str> = doc.keywords_in(self.level, index).collect();
            let ids: Vec<&str> = ids.into_iter().collect();
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    let acc = self
                        .counts
                        .entry((a.to_string(), b.to_string(), bucket.clone()))
                        .or_default();
                    acc.count += 1;
                    acc.keywords.extend(keywords.iter().map(|k| k.to_string()));
                    acc.examples.insert(ExampleRef(doc.article_id.clone(), index));
                    if acc.examples.len() > self.limit {
                        acc.examples.pop_last();
                    }
                }
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: PairCounter) -> PairCounter {
        for (key, acc) in other.counts {
            let mine = self.counts.entry(key).or_default();
            mine.count += acc.count;
            mine.keywords.extend(acc.keywords);
            mine.examples.extend(acc.examples);
            while mine.examples.len() > self.limit {
                mine.examples.pop_last();
            }
        }
        self
    }

    /// Records sorted by (a, b, bucket).
    pub fn into_records(self) -> Vec<CoocRecord> {
        let window = self.level;
        self.counts
            .into_iter()
            .map(|((a, b, bucket), acc)| CoocRecord {
                pair: (a, b),
                window,
                bucket,
                count: acc.count,
                keywords: acc.keywords,
                example_refs: acc.examples.into_iter().collect(),
            })
            .collect()
    }
}

/// Count co-occurring pairs over all documents, in parallel.
pub fn count_pairs(
    docs: &[MentionedDoc],
    level: WindowLevel,
    bucketing: Bucketing,
) -> Result<Vec<CoocRecord>, AssociateError> {
    count_pairs_with(docs, level, bucketing, DEFAULT_EXAMPLE_REFS)
}

pub fn count_pairs_with(
    docs: &[MentionedDoc],
    level: WindowLevel,
    bucketing: Bucketing,
    example_limit: usize,
) -> Result<Vec<CoocRecord>, AssociateError> {
    let fresh = || PairCounter::new(level, bucketing, example_limit);
    let counter = docs
        .par_iter()
        .try_fold(fresh, |mut c, d| c.add_doc(d).map(|_| c))
        .try_reduce(fresh, |a, b| Ok(a.merge(b)))?;
    Ok(counter.into_records())
}

/// Inclusive bucket range. Bounds compare on the bound's own length, so a
/// year bound covers every month of that year. `unknown` is only inside the
/// unbounded range.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketRange {
    pub from: Option<String>,
    pub to: Option<String>,
}

impl BucketRange {
    pub fn all() -> Self {
        BucketRange::default()
    }

    pub fn between(from: &str, to: &str) -> Self {
        BucketRange {
            from: Some(from.to_string()),
            to: Some(to.to_string()),
        }
    }

    pub fn contains(&self, bucket: &str) -> bool {
        if bucket == UNKNOWN_BUCKET {
            return self.from.is_none() && self.to.is_none();
        }
        let prefix = |bound: &str| &bucket[..bound.len().min(bucket.len())];
        self.from.as_deref().is_none_or(|f| prefix(f) >= f)
            && self.to.as_deref().is_none_or(|t| prefix(t) <= t)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrendFilter {
    pub entity_type: Option<EntityType>,
    pub buckets: BucketRange,
    pub window: Option<WindowLevel>,
    pub min_count: u64,
}

impl TrendFilter {
    pub fn of_type(entity_type: EntityType) -> Self {
        TrendFilter {
            entity_type: Some(entity_type),
            ..TrendFilter::default()
        }
    }

    fn type_ok(&self, catalog: &EntityCatalog, id: &str) -> bool {
        self.entity_type
            .is_none_or(|t| catalog.entity_type(id) == Some(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendRow {
    pub entity: String,
    pub label: String,
    pub cells: Vec<u64>,
    pub total: u64,
}

/// Entity × time-bucket counts, rows ranked by total.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendMatrix {
    pub buckets: Vec<String>,
    pub rows: Vec<TrendRow>,
}

impl TrendMatrix {
    /// Build from per-entity bucket counts. Columns are the buckets present
    /// (ascending, `unknown` last); rows are sorted by total descending, then
    /// label, then id.
    pub fn from_counts<F>(counts: BTreeMap<String, BTreeMap<String, u64>>, label: F) -> Self
    where
        F: Fn(&str) -> String,
    {
        let mut buckets: Vec<String> = counts
            .values()
            .flat_map(|m| m.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        buckets.sort_by(|a, b| bucket_order(a, b));
        let mut rows: Vec<TrendRow> = counts
            .into_iter()
            .map(|(entity, per)| {
                let cells: Vec<u64> = buckets.iter().map(|b| per.get(b).copied().unwrap_or(0)).collect();
                TrendRow {
                    label: label(&entity),
                    total: cells.iter().sum(),
                    entity,
                    cells,
                }
            })
            .collect();
        rows.sort_by(|a, b| {
            b.total
                .cmp(&a.total)
                .then_with(|| a.label.cmp(&b.label))
                .then_with(|| a.entity.cmp(&b.entity))
        });
        TrendMatrix { buckets, rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, entity: &str) -> Option<&TrendRow> {
        self.rows.iter().find(|r| r.entity == entity)
    }
}

/// Rows are the partners co-occurring with `target` (an id or a catalog
/// label); cells are pair counts.
pub fn pair_trend(
    records: &[CoocRecord],
    target: &str,
    filter: &TrendFilter,
    catalog: &EntityCatalog,
) -> TrendMatrix {
    let target = catalog.resolve(target).unwrap_or(target);
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut seen = false;
    for r in records {
        let Some(partner) = r.partner_of(target) else {
            continue;
        };
        seen = true;
        if filter.window.is_some_and(|w| w != r.window)
            || !filter.buckets.contains(&r.bucket)
            || !filter.type_ok(catalog, partner)
        {
            continue;
        }
        *counts
            .entry(partner.to_string())
            .or_default()
            .entry(r.bucket.clone())
            .or_default() += r.count;
    }
    if !seen {
        log::warn!("no co-occurrences recorded for {target:?}");
    }
    counts.retain(|_, per| per.values().sum::<u64>() >= filter.min_count.max(1));
    TrendMatrix::from_counts(counts, |id| catalog.label(id).to_string())
}

/// Rows are entities; cells count window units mentioning the entity. With
/// `partner_type`, only units that also mention an entity of that type
/// count.
pub fn entity_trend(
    docs: &[MentionedDoc],
    level: WindowLevel,
    bucketing: Bucketing,
    filter: &TrendFilter,
    partner_type: Option<EntityType>,
    catalog: &EntityCatalog,
) -> Result<TrendMatrix, AssociateError> {
    let per_doc = docs
        .par_iter()
        .map(|doc| {
            let bucket = bucketing.label(doc.published_at);
            let mut local: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
            if !filter.buckets.contains(&bucket) {
                return Ok(local);
            }
            for ids in doc.window_sets(level)?.into_values() {
                for &id in &ids {
                    if !filter.type_ok(catalog, id) {
                        continue;
                    }
                    if let Some(pt) = partner_type {
                        let has_partner = ids
                            .iter()
                            .any(|&o| o != id && catalog.entity_type(o) == Some(pt));
                        if !has_partner {
                            continue;
                        }
                    }
                    *local
                        .entry(id.to_string())
                        .or_default()
                        .entry(bucket.clone())
                        .or_default() += 1;
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>, AssociateError>>()?;
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for local in per_doc {
        for (id, per) in local {
            let row = counts.entry(id).or_default();
            for (b, c) in per {
                *row.entry(b).or_default() += c;
            }
        }
    }
    counts.retain(|_, per| per.values().sum::<u64>() >= filter.min_count.max(1));
    Ok(TrendMatrix::from_counts(counts, |id| catalog.label(id).to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntity {
    pub entity: String,
    pub label: String,
    pub total: u64,
}

/// Top `k` rows by raw total; ties by label.
pub fn rank_rows(m: &TrendMatrix, k: usize) -> Vec<RankedEntity> {
    let mut rows: Vec<&TrendRow> = m.rows.iter().collect();
    rows.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.label.cmp(&b.label)));
    rows.into_iter()
        .take(k)
        .map(|r| RankedEntity {
            entity: r.entity.clone(),
            label: r.label.clone(),
            total: r.total,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Association {
    pub partner: String,
    pub label: String,
    pub per_bucket: BTreeMap<String, u64>,
    pub total: u64,
    pub keywords: BTreeSet<String>,
}

/// Every partner of `target` passing `filter`, ranked like [`rank_rows`].
pub fn associations_for(
    target: &str,
    records: &[CoocRecord],
    filter: &TrendFilter,
    catalog: &EntityCatalog,
) -> Vec<Association> {
    let target = catalog.resolve(target).unwrap_or(target);
    let mut by_partner: BTreeMap<&str, Association> = BTreeMap::new();
    for r in records {
        let Some(partner) = r.partner_of(target) else {
            continue;
        };
        if filter.window.is_some_and(|w| w != r.window)
            || !filter.buckets.contains(&r.bucket)
            || !filter.type_ok(catalog, partner)
        {
            continue;
        }
        let a = by_partner.entry(partner).or_insert_with(|| Association {
            partner: partner.to_string(),
            label: catalog.label(partner).to_string(),
            per_bucket: BTreeMap::new(),
            total: 0,
            keywords: BTreeSet::new(),
        });
        *a.per_bucket.entry(r.bucket.clone()).or_default() += r.count;
        a.total += r.count;
        a.keywords.extend(r.keywords.iter().cloned());
    }
    let mut out: Vec<Association> = by_partner
        .into_values()
        .filter(|a| a.total >= filter.min_count.max(1))
        .collect();
    out.sort_by(|a, b| {
        b.total
            .cmp(&a.total)
            .then_with(|| a.label.cmp(&b.label))
            .then_with(|| a.partner.cmp(&b.partner))
    });
    out
}
