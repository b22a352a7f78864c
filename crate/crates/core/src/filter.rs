//! Document filtering: lexical phrase matching and semantic relevance.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{normalize_tokens, AnnotatedDoc, Article, Span};
use crate::embed::{cosine, EmbedError, EmbeddingProvider, Vector};

pub const DEFAULT_THRESHOLD: f64 = 0.35;
pub const DEFAULT_MIN_HITS: usize = 1;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("phrase list is empty")]
    NoPhrases,
    #[error("article {article_id}: {source}")]
    Provider {
        article_id: String,
        #[source]
        source: EmbedError,
    },
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<String, usize>,
    terminal: Option<usize>,
}

/// Case-insensitive, token-boundary multi-phrase matcher. Phrases are
/// normalized with the corpus tokenizer and stored in a token trie.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    phrases: Vec<Vec<String>>,
    labels: Vec<String>,
    nodes: Vec<TrieNode>,
    skipped_empty: usize,
}

/// One occurrence of a stored phrase, in token indices (half-open).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhraseHit {
    pub start: usize,
    pub end: usize,
    pub phrase: usize,
}

impl PhraseMatcher {
    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Normalized token sequence of phrase `id`.
    pub fn phrase_tokens(&self, id: usize) -> &[String] {
        &self.phrases[id]
    }

    /// Normalized phrase text (tokens joined by single spaces).
    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of input phrases dropped because they normalized to nothing.
    pub fn skipped_empty(&self) -> usize {
        self.skipped_empty
    }

    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn insert(&mut self, tokens: Vec<String>) -> usize {
        let mut node = 0;
        for tok in &tokens {
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(tok.clone(), next);
                    next
                }
            };
        }
        if let Some(existing) = self.nodes[node].terminal {
            return existing;
        }
        let id = self.phrases.len();
        self.nodes[node].terminal = Some(id);
        self.labels.push(tokens.join(" "));
        self.phrases.push(tokens);
        id
    }

    /// Every occurrence of every phrase, overlaps included, ordered by
    /// (start, end).
    pub fn find_all<S: AsRef<str>>(&self, norms: &[S]) -> Vec<PhraseHit> {
        let mut hits = Vec::new();
        for start in 0..norms.len() {
            let mut node = 0;
            for (offset, tok) in norms[start..].iter().enumerate() {
                match self.nodes[node].children.get(tok.as_ref()) {
                    Some(&next) => node = next,
                    None => break,
                }
                if let Some(phrase) = self.nodes[node].terminal {
                    hits.push(PhraseHit {
                        start,
                        end: start + offset + 1,
                        phrase,
                    });
                }
            }
        }
        hits
    }
}

/// Compile a phrase list. Empty entries are skipped with a warning and
/// duplicates (after normalization) collapse to one phrase.
pub fn compile_phrases<S: AsRef<str>>(phrases: &[S]) -> Result<PhraseMatcher, FilterError> {
    let mut matcher = PhraseMatcher {
        phrases: Vec::new(),
        labels: Vec::new(),
        nodes: vec![TrieNode::default()],
        skipped_empty: 0,
    };
    for raw in phrases {
        let tokens = normalize_tokens(raw.as_ref());
        if tokens.is_empty() {
            log::warn!("ignoring empty phrase {:?}", raw.as_ref());
            matcher.skipped_empty += 1;
            continue;
        }
        matcher.insert(tokens);
    }
    if matcher.is_empty() {
        return Err(FilterError::NoPhrases);
    }
    Ok(matcher)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterStrategy {
    Lexical,
    Semantic,
    /// Every article is kept.
    #[serde(rename = "none")]
    Passthrough,
}

impl FilterStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterStrategy::Lexical => "lexical",
            FilterStrategy::Semantic => "semantic",
            FilterStrategy::Passthrough => "none",
        }
    }
}

impl std::str::FromStr for FilterStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lexical" => Ok(FilterStrategy::Lexical),
            "semantic" => Ok(FilterStrategy::Semantic),
            "none" => Ok(FilterStrategy::Passthrough),
            _ => Err(format!("unknown filter strategy {s:?} (expected lexical, semantic or none)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseHits {
    pub count: usize,
    pub offsets: Vec<Span>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalResult {
    pub article_id: String,
    /// Phrase label to hits; only phrases with at least one hit appear.
    pub hits: BTreeMap<String, PhraseHits>,
}

impl LexicalResult {
    pub fn total(&self) -> usize {
        self.hits.values().map(|h| h.count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub article_id: String,
    pub kept: bool,
    pub score: f64,
    pub strategy: FilterStrategy,
}

/// Count phrase hits in `doc`. Hits of different phrases may overlap; hits
/// of the same phrase are taken greedily left to right without overlap.
pub fn lexical_hits(doc: &AnnotatedDoc, matcher: &PhraseMatcher) -> LexicalResult {
    let norms: Vec<&str> = doc.tokens.iter().map(|t| t.norm.as_str()).collect();
    let mut next_free = vec![0usize; matcher.len()];
    let mut result = LexicalResult {
        article_id: doc.article_id.clone(),
        hits: BTreeMap::new(),
    };
    for hit in matcher.find_all(&norms) {
        if hit.start < next_free[hit.phrase] {
            continue;
        }
        next_free[hit.phrase] = hit.end;
        let span = Span::new(doc.tokens[hit.start].start, doc.tokens[hit.end - 1].end);
        let entry = result
            .hits
            .entry(matcher.label(hit.phrase).to_string())
            .or_default();
        entry.count += 1;
        entry.offsets.push(span);
    }
    result
}

pub fn lexical_filter(
    doc: &AnnotatedDoc,
    matcher: &PhraseMatcher,
    min_hits: usize,
) -> (LexicalResult, FilterDecision) {
    let result = lexical_hits(doc, matcher);
    let total = result.total();
    let decision = FilterDecision {
        article_id: doc.article_id.clone(),
        kept: total >= min_hits.max(1),
        score: total as f64,
        strategy: FilterStrategy::Lexical,
    };
    (result, decision)
}

/// Semantic relevance filter holding the embedded query.
pub struct SemanticFilter<'p> {
    provider: &'p dyn EmbeddingProvider,
    query: Vector,
    threshold: f64,
}

impl<'p> SemanticFilter<'p> {
    pub fn new(
        provider: &'p dyn EmbeddingProvider,
        query: &str,
        threshold: f64,
    ) -> Result<Self, EmbedError> {
        Ok(SemanticFilter {
            provider,
            query: provider.embed(query)?,
            threshold,
        })
    }

    pub fn decide(&self, article: &Article) -> Result<FilterDecision, FilterError> {
        let wrap = |source| FilterError::Provider {
            article_id: article.id.clone(),
            source,
        };
        let v = self.provider.embed(&article.full_text()).map_err(wrap)?;
        let score = cosine(&v, &self.query).map_err(wrap)?;
        Ok(FilterDecision {
            article_id: article.id.clone(),
            kept: score >= self.threshold,
            score,
            strategy: FilterStrategy::Semantic,
        })
    }
}

pub fn semantic_filter(
    article: &Article,
    query: &str,
    provider: &dyn EmbeddingProvider,
    threshold: f64,
) -> Result<FilterDecision, FilterError> {
    SemanticFilter::new(provider, query, threshold)
        .map_err(|source| FilterError::Provider {
            article_id: article.id.clone(),
            source,
        })?
        .decide(article)
}

/// Lexical filter over a corpus; results sorted by article id.
pub fn lexical_filter_all(
    docs: &[AnnotatedDoc],
    matcher: &PhraseMatcher,
    min_hits: usize,
) -> Vec<(LexicalResult, FilterDecision)> {
    let mut out: Vec<_> = docs
        .par_iter()
        .map(|d| lexical_filter(d, matcher, min_hits))
        .collect();
    out.sort_by(|a, b| a.1.article_id.cmp(&b.1.article_id));
    out
}

/// Semantic filter over a corpus; results sorted by article id.
pub fn semantic_filter_all(
    articles: &[Article],
    filter: &SemanticFilter<'_>,
) -> Result<Vec<FilterDecision>, FilterError> {
    let mut out = articles
        .par_iter()
        .map(|a| filter.decide(a))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.article_id.cmp(&b.article_id));
    Ok(out)
}
