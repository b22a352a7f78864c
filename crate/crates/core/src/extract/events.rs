use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDoc, Span};
use crate::filter::{compile_phrases, PhraseMatcher};

use super::{
    alias_key, longest_first, EntityType, ExtractError, ExtractorId, Mention, EVENT_CONFIDENCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventType {
    Bankruptcy,
    Employment,
    CorporateAcquisition,
    InvestmentGeneral,
    CorporateMerger,
    Ipo,
}

impl EventType {
    pub const ALL: [EventType; 6] = [
        EventType::Bankruptcy,
        EventType::Employment,
        EventType::CorporateAcquisition,
        EventType::InvestmentGeneral,
        EventType::CorporateMerger,
        EventType::Ipo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Bankruptcy => "BANKRUPTCY",
            EventType::Employment => "EMPLOYMENT",
            EventType::CorporateAcquisition => "CORPORATE_ACQUISITION",
            EventType::InvestmentGeneral => "INVESTMENT_GENERAL",
            EventType::CorporateMerger => "CORPORATE_MERGER",
            EventType::Ipo => "IPO",
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        // "ACQUISITION" is accepted as shorthand for the acquisition type
        if upper == "ACQUISITION" {
            return Ok(EventType::CorporateAcquisition);
        }
        EventType::ALL
            .into_iter()
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| ExtractError::Unknown {
                kind: "event type",
                value: s.to_string(),
            })
    }
}

const DEFAULT_TRIGGERS: &[(&str, EventType)] = &[
    ("bankruptcy", EventType::Bankruptcy),
    ("bankrupt", EventType::Bankruptcy),
    ("chapter 11", EventType::Bankruptcy),
    ("insolvency", EventType::Bankruptcy),
    ("insolvent", EventType::Bankruptcy),
    ("liquidation", EventType::Bankruptcy),
    ("hired", EventType::Employment),
    ("hires", EventType::Employment),
    ("hiring", EventType::Employment),
    ("appointed", EventType::Employment),
    ("layoffs", EventType::Employment),
    ("layoff", EventType::Employment),
    ("laid off", EventType::Employment),
    ("resigned", EventType::Employment),
    ("stepped down", EventType::Employment),
    ("departures", EventType::Employment),
    ("acquired", EventType::CorporateAcquisition),
    ("acquires", EventType::CorporateAcquisition),
    ("acquisition", EventType::CorporateAcquisition),
    ("acquisitions", EventType::CorporateAcquisition),
    ("takeover", EventType::CorporateAcquisition),
    ("buyout", EventType::CorporateAcquisition),
    ("invested", EventType::InvestmentGeneral),
    ("invests", EventType::InvestmentGeneral),
    ("funding round", EventType::InvestmentGeneral),
    ("stake in", EventType::InvestmentGeneral),
    ("merger", EventType::CorporateMerger),
    ("mergers", EventType::CorporateMerger),
    ("merged", EventType::CorporateMerger),
    ("merge", EventType::CorporateMerger),
    ("ipo", EventType::Ipo),
    ("ipos", EventType::Ipo),
    ("initial public offering", EventType::Ipo),
    ("went public", EventType::Ipo),
];

/// Trigger phrases for financial events.
#[derive(Debug, Clone)]
pub struct EventLexicon {
    triggers: BTreeMap<String, EventType>,
    matcher: PhraseMatcher,
}

impl EventLexicon {
    pub fn new<I, S>(entries: I) -> Result<Self, ExtractError>
    where
        I: IntoIterator<Item = (S, EventType)>,
        S: AsRef<str>,
    {
        let triggers: BTreeMap<String, EventType> = entries
            .into_iter()
            .map(|(t, e)| (alias_key(t.as_ref()), e))
            .filter(|(k, _)| !k.is_empty())
            .collect();
        let keys: Vec<&str> = triggers.keys().map(String::as_str).collect();
        let matcher = compile_phrases(&keys).map_err(|_| ExtractError::Unknown {
            kind: "event lexicon",
            value: "no triggers".into(),
        })?;
        Ok(EventLexicon { triggers, matcher })
    }

    /// Load a JSON object mapping trigger phrase to event type name.
    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExtractError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| ExtractError::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let entries = raw
            .into_iter()
            .map(|(k, v)| Ok((k, v.parse::<EventType>()?)))
            .collect::<Result<Vec<_>, ExtractError>>()?;
        EventLexicon::new(entries)
    }

    pub fn triggers(&self) -> &BTreeMap<String, EventType> {
        &self.triggers
    }

    pub fn tag(&self, doc: &AnnotatedDoc) -> Vec<Mention> {
        let norms: Vec<&str> = doc.tokens.iter().map(|t| t.norm.as_str()).collect();
        let hits = self
            .matcher
            .find_all(&norms)
            .into_iter()
            .map(|h| {
                let span = Span::new(doc.tokens[h.start].start, doc.tokens[h.end - 1].end);
                (span, self.triggers[self.matcher.label(h.phrase)])
            })
            .collect();
        longest_first(hits)
            .into_iter()
            .filter_map(|(span, event)| {
                Mention::at(
                    doc,
                    span,
                    event.as_str().to_string(),
                    EntityType::Event,
                    ExtractorId::Event,
                    EVENT_CONFIDENCE,
                )
            })
            .collect()
    }
}

impl Default for EventLexicon {
    fn default() -> Self {
        EventLexicon::new(DEFAULT_TRIGGERS.iter().copied()).expect("default lexicon is valid")
    }
}

pub fn event_tag(doc: &AnnotatedDoc, lexicon: &EventLexicon) -> Vec<Mention> {
    lexicon.tag(doc)
}
