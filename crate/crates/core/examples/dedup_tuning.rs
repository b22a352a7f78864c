//! Cluster near-duplicate articles, tuning the cut threshold by silhouette,
//! and keep one representative per cluster.
//!
//! cargo run --example dedup_tuning

use std::error::Error;
use std::path::Path;

use assocmine::corpus::load_corpus;
use assocmine::dedup::{
    agglomerate, dedupe, distance_matrix, silhouette, threshold_grid, tune_threshold, DedupSettings,
};
use assocmine::embed::{EmbeddingProvider, HashedTf};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo/corpus.jsonl");
    let (articles, _) = load_corpus(&path)?;
    let provider = HashedTf::default();

    let texts: Vec<String> = articles.iter().map(|a| a.full_text()).collect();
    let m = distance_matrix(&provider.embed_batch(&texts)?)?;
    println!("threshold  clusters  silhouette");
    for t in threshold_grid(0.05, 0.95, 0.15)? {
        let c = agglomerate(&m, t);
        let s = silhouette(&m, &c)?;
        println!("{t:>9.2}  {:>8}  {}", c.cluster_count(), s.map_or("-".into(), |s| format!("{s:.3}")));
    }

    let grid = threshold_grid(0.05, 0.3, 0.05)?;
    let tuned = tune_threshold(&m, &grid)?;
    println!("tuned threshold {:.2}", tuned.threshold);

    let settings = DedupSettings { grid, ..DedupSettings::default() };
    let outcome = dedupe(&articles, &provider, &settings)?;
    for c in outcome.batches.iter().flat_map(|b| &b.clusters).filter(|c| c.members.len() > 1) {
        println!("kept {} of {:?}", c.representative, c.members);
    }
    println!("{} articles -> {} after dedup", articles.len(), outcome.kept_ids().len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
