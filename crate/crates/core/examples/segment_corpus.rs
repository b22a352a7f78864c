//! Load the demo corpus and show its paragraph / sentence / token structure.
//!
//! cargo run --example segment_corpus

use std::error::Error;
use std::path::Path;

use assocmine::corpus::{load_corpus, PosHint, Segmenter};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/corpus.jsonl");
    let (articles, summary) = load_corpus(&path)?;
    println!("{summary}");

    let segmenter = Segmenter::default();
    for article in &articles {
        let doc = segmenter.segment(article);
        let content = doc.tokens.iter().filter(|t| t.pos_hint == PosHint::Content).count();
        println!(
            "{} {:>10}  paragraphs={} sentences={} tokens={} content={}",
            article.id,
            article.published_at.map_or("undated".to_string(), |d| d.to_string()),
            doc.paragraphs.len(),
            doc.sentences.len(),
            doc.tokens.len(),
            content
        );
    }

    // abbreviations do not end sentences
    let doc = segmenter.segment_text("x", "Mr. Smith joined Acme Corp. in May. He left in June.");
    for s in &doc.sentences {
        println!("  sentence: {:?}", doc.slice(s.span));
    }
    assert_eq!(doc.sentences.len(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
