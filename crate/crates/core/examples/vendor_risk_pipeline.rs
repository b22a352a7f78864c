//! Run the shipped vendor-risk configuration, rank vendors by risk
//! mentions and list the risks linked to Morgan Stanley.
//!
//! cargo run --example vendor_risk_pipeline

use std::error::Error;
use std::path::Path;

use assocmine::associate::{rank_rows, BucketRange};
use assocmine::{EntityType, Pipeline, PipelineConfig, RunOptions, Stage};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/vendor_risk.conf");
    let mut config = PipelineConfig::load(&conf)?;
    let out = std::env::temp_dir().join(format!("assocmine-vendor-risk-{}", std::process::id()));
    config.out_dir = out.clone();
    let heatmap = config.heatmap.clone();

    let pipeline = Pipeline::new(config, RunOptions::default());
    pipeline.run(&Stage::ALL)?;

    println!("vendors ranked by risk mentions:");
    for (i, r) in rank_rows(&pipeline.trend(&heatmap)?, 5).iter().enumerate() {
        println!("  {}. {} {}", i + 1, r.label, r.total);
    }

    let graph = pipeline.load_graph()?;
    println!("risks linked to Morgan Stanley:");
    for n in graph.neighbors("morgan stanley", Some(EntityType::Risk), &BucketRange::all(), 1) {
        println!("  {} {}", n.node.label, n.weight);
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
