//! Run the gazetteer, product-pattern and event extractors on one article
//! and merge their mentions.
//!
//! cargo run --example extract_entities

use std::error::Error;

use assocmine::corpus::Segmenter;
use assocmine::extract::{
    default_categories, merge_mentions, EntityRecord, EntityType, EventLexicon, Gazetteer,
    PatternExtractor, Registry,
};

fn org(id: &str, name: &str, aliases: &[&str]) -> EntityRecord {
    EntityRecord {
        canonical_id: id.into(),
        canonical_name: name.into(),
        entity_type: EntityType::Org,
        aliases: aliases.iter().map(|a| a.to_string()).collect(),
        uri: None,
    }
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let registry = Registry::new(vec![
        org("schwab", "Charles Schwab", &["Schwab"]),
        org("td ameritrade", "TD Ameritrade", &[]),
        org("fidelity", "Fidelity", &["Fidelity Investments"]),
        org("sec", "SEC", &["Securities and Exchange Commission"]),
    ])?;
    let body = "A spokesperson for Schwab, which acquired TD Ameritrade in October 2020, confirmed the departures. \
                Fidelity Investments asked the Securities and Exchange Commission to approve a spot bitcoin ETF. \
                The SEC has reviewed the Magellan fund before.";
    let doc = Segmenter::default().segment_text("demo", body);

    let gazetteer = Gazetteer::new(&registry).extract(&doc);
    let patterns = PatternExtractor::new(&default_categories(), registry.clone())?.extract(&doc);
    let events = EventLexicon::default().tag(&doc);
    let merged = merge_mentions(vec![gazetteer, patterns, events]);

    for m in &merged {
        println!(
            "s{} {:<38} -> {:<22} {:<8} {:?} {:.1}",
            m.sentence_index, format!("{:?}", m.surface), m.canonical_id, m.entity_type.as_str(), m.extractor_id, m.confidence
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
