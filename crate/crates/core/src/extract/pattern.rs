use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDoc, PosHint, Span};

use super::{
    longest_first, EntityType, ExtractError, ExtractorId, Mention, Registry, PATTERN_CONFIDENCE,
};

/// Maximum number of modifier tokens before a trigger.
pub const MODIFIER_CAP: usize = 4;

/// A product category and the surface forms that trigger it. A plural
/// trigger whose singular is also listed canonicalizes to the singular.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductCategory {
    pub name: String,
    pub triggers: Vec<String>,
}

impl ProductCategory {
    pub fn new(name: &str, triggers: &[&str]) -> Self {
        ProductCategory {
            name: name.to_string(),
            triggers: triggers.iter().map(|t| t.to_string()).collect(),
        }
    }
}

pub fn default_categories() -> Vec<ProductCategory> {
    vec![
        ProductCategory::new("Fund", &["fund", "funds"]),
        ProductCategory::new("Bond", &["bond", "bonds"]),
        ProductCategory::new("ETF", &["etf", "etfs"]),
        ProductCategory::new(
            "Derivatives",
            &["derivative", "derivatives", "future", "futures", "option", "options", "swap", "swaps"],
        ),
    ]
}

/// Product-name matcher: up to [`MODIFIER_CAP`] content tokens immediately
/// followed by a category trigger, within one sentence.
#[derive(Debug, Clone)]
pub struct PatternExtractor {
    /// Trigger norm to canonical trigger.
    triggers: HashMap<String, String>,
    registry: Registry,
}

impl PatternExtractor {
    pub fn new(categories: &[ProductCategory], registry: Registry) -> Result<Self, ExtractError> {
        let mut triggers = HashMap::new();
        for cat in categories {
            let norms: Vec<String> = cat
                .triggers
                .iter()
                .map(|t| t.trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect();
            if norms.is_empty() {
                return Err(ExtractError::EmptyCategory(cat.name.clone()));
            }
            for n in &norms {
                let canonical = n
                    .strip_suffix('s')
                    .filter(|single| norms.iter().any(|m| m == single))
                    .unwrap_or(n);
                triggers.entry(n.clone()).or_insert_with(|| canonical.to_string());
            }
        }
        Ok(PatternExtractor { triggers, registry })
    }

    pub fn extract(&self, doc: &AnnotatedDoc) -> Vec<Mention> {
        let mut cands: Vec<(Span, String)> = Vec::new();
        for sentence in &doc.sentences {
            let toks = &doc.tokens[sentence.tokens.clone()];
            for (t, trigger) in toks.iter().enumerate() {
                if trigger.pos_hint == PosHint::Punct {
                    continue;
                }
                let Some(canonical_trigger) = self.triggers.get(&trigger.norm) else {
                    continue;
                };
                let first = (0..t)
                    .rev()
                    .take(MODIFIER_CAP)
                    .take_while(|&j| toks[j].pos_hint == PosHint::Content)
                    .last();
                let Some(first) = first else { continue };
                let span = Span::new(toks[first].start, trigger.end);
                let mut words: Vec<&str> = toks[first..t].iter().map(|x| x.norm.as_str()).collect();
                words.push(canonical_trigger);
                let surface = doc.slice(span);
                let id = match self.registry.lookup_alias(surface) {
                    Some(rec) => rec.canonical_id.clone(),
                    None => words.join(" "),
                };
                cands.push((span, id));
            }
        }
        longest_first(cands)
            .into_iter()
            .filter_map(|(span, id)| {
                Mention::at(
                    doc,
                    span,
                    id,
                    EntityType::Product,
                    ExtractorId::Pattern,
                    PATTERN_CONFIDENCE,
                )
            })
            .collect()
    }
}

pub fn pattern_extract(doc: &AnnotatedDoc, categories: &[ProductCategory]) -> Vec<Mention> {
    PatternExtractor::new(categories, Registry::default())
        .map(|p| p.extract(doc))
        .unwrap_or_default()
}
