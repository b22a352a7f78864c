//! Keep articles that mention any of a set of phrases, and report where.
//!
//! cargo run --example lexical_filter

use std::error::Error;
use std::path::Path;

use assocmine::corpus::{load_corpus, Segmenter};
use assocmine::filter::{compile_phrases, lexical_filter_all};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/corpus.jsonl");
    let (articles, _) = load_corpus(&path)?;
    let segmenter = Segmenter::default();
    let docs: Vec<_> = articles.iter().map(|a| segmenter.segment(a)).collect();

    let matcher = compile_phrases(&["launch", "launched", "unveiled", "filed", "trending", "spot bitcoin etf"])?;
    let results = lexical_filter_all(&docs, &matcher, 1);
    for (hits, decision) in &results {
        let summary: Vec<String> = hits
            .hits
            .iter()
            .map(|(phrase, h)| format!("{phrase}×{}", h.count))
            .collect();
        println!(
            "{} {} {}",
            decision.article_id,
            if decision.kept { "keep" } else { "drop" },
            summary.join(", ")
        );
    }
    let kept = results.iter().filter(|(_, d)| d.kept).count();
    println!("kept {kept} of {}", results.len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
