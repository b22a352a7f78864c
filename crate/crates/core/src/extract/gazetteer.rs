use crate::corpus::{AnnotatedDoc, Span};
use crate::filter::{compile_phrases, PhraseMatcher};

use super::{longest_first, ExtractorId, Mention, Registry, GAZETTEER_CONFIDENCE};

/// Dictionary extractor over registry aliases.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    matcher: Option<PhraseMatcher>,
    /// Phrase id to (canonical id, entity type).
    targets: Vec<(String, super::EntityType)>,
}

impl Gazetteer {
    pub fn new(registry: &Registry) -> Self {
        let aliases: Vec<&str> = registry
            .records()
            .iter()
            .flat_map(|r| r.aliases.iter().map(String::as_str))
            .collect();
        let Ok(matcher) = compile_phrases(&aliases) else {
            return Gazetteer {
                matcher: None,
                targets: Vec::new(),
            };
        };
        let targets = matcher
            .labels()
            .iter()
            .map(|label| {
                let rec = registry
                    .lookup_alias(label)
                    .expect("every compiled alias is indexed");
                (rec.canonical_id.clone(), rec.entity_type)
            })
            .collect();
        Gazetteer {
            matcher: Some(matcher),
            targets,
        }
    }

    pub fn extract(&self, doc: &AnnotatedDoc) -> Vec<Mention> {
        let Some(matcher) = &self.matcher else {
            return Vec::new();
        };
        let norms: Vec<&str> = doc.tokens.iter().map(|t| t.norm.as_str()).collect();
        let hits = matcher
            .find_all(&norms)
            .into_iter()
            .map(|h| {
                let span = Span::new(doc.tokens[h.start].start, doc.tokens[h.end - 1].end);
                (span, h.phrase)
            })
            .collect();
        longest_first(hits)
            .into_iter()
            .filter_map(|(span, phrase)| {
                let (id, ty) = &self.targets[phrase];
                Mention::at(
                    doc,
                    span,
                    id.clone(),
                    *ty,
                    ExtractorId::Gazetteer,
                    GAZETTEER_CONFIDENCE,
                )
            })
            .collect()
    }
}

pub fn gazetteer_extract(doc: &AnnotatedDoc, registry: &Registry) -> Vec<Mention> {
    Gazetteer::new(registry).extract(doc)
}
