//! Score articles against a free-text query by embedding cosine.
//!
//! The built-in hashed term-frequency provider needs no model; point an
//! `HttpProvider` at an embedding service for real semantic similarity.
//!
//! cargo run --example semantic_filter

use std::error::Error;
use std::path::Path;

use assocmine::corpus::load_corpus;
use assocmine::embed::HashedTf;
use assocmine::filter::{semantic_filter_all, SemanticFilter};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/corpus.jsonl");
    let (articles, _) = load_corpus(&path)?;

    let provider = HashedTf::default();
    let filter = SemanticFilter::new(&provider, "bitcoin etf launch", 0.2)?;
    let mut decisions = semantic_filter_all(&articles, &filter)?;
    decisions.sort_by(|a, b| b.score.total_cmp(&a.score));
    for d in &decisions {
        println!("{} {:.3} {}", d.article_id, d.score, if d.kept { "keep" } else { "drop" });
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
