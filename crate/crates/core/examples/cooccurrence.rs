//! Count entity pairs at sentence, paragraph and article level on the demo
//! corpus.
//!
//! cargo run --example cooccurrence

use std::error::Error;
use std::path::Path;

use assocmine::associate::{count_pairs, MentionedDoc};
use assocmine::corpus::{load_corpus, Segmenter};
use assocmine::extract::{default_categories, merge_mentions, Gazetteer, PatternExtractor, Registry};
use assocmine::{Bucketing, WindowLevel};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo");
    let (articles, _) = load_corpus(&data.join("corpus.jsonl"))?;
    let registry = Registry::load(&[data.join("brands.jsonl")])?;
    let gazetteer = Gazetteer::new(&registry);
    let patterns = PatternExtractor::new(&default_categories(), registry.clone())?;
    let segmenter = Segmenter::default();

    let docs: Vec<MentionedDoc> = articles
        .iter()
        .map(|a| {
            let doc = segmenter.segment(a);
            let mentions = merge_mentions(vec![gazetteer.extract(&doc), patterns.extract(&doc)]);
            MentionedDoc::new(&doc, a.published_at, mentions, None)
        })
        .collect();

    for level in WindowLevel::ALL {
        let records = count_pairs(&docs, level, Bucketing::None)?;
        let total: u64 = records.iter().map(|r| r.count).sum();
        println!("{level:<9} {} distinct pairs, {total} co-occurrences", records.len());
    }

    let by_year = count_pairs(&docs, WindowLevel::Sentence, Bucketing::Year)?;
    for r in by_year.iter().filter(|r| r.involves("fidelity")) {
        println!("  {} + {} [{}] ×{}", r.pair.0, r.pair.1, r.bucket, r.count);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
