//! Run the shipped brand/product configuration end to end and print the
//! brand heatmap and Fidelity's product associations.
//!
//! cargo run --example brand_product_pipeline

use std::error::Error;
use std::path::Path;

use assocmine::associate::{associations_for, TrendFilter};
use assocmine::{EntityType, Pipeline, PipelineConfig, RunOptions, Stage};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let conf = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/brand_product.conf");
    let mut config = PipelineConfig::load(&conf)?;
    let out = std::env::temp_dir().join(format!("assocmine-brand-product-{}", std::process::id()));
    config.out_dir = out.clone();

    let pipeline = Pipeline::new(config, RunOptions::default());
    for summary in pipeline.run(&Stage::ALL)? {
        println!("{summary}");
    }
    print!("{}", std::fs::read_to_string(out.join("heatmap.csv"))?);

    let catalog = pipeline.read_catalog()?;
    let pairs = pipeline.read_pairs()?;
    println!("Fidelity products:");
    for a in associations_for("fidelity", &pairs, &TrendFilter::of_type(EntityType::Product), &catalog) {
        println!("  {:<20} {} {:?} {:?}", a.label, a.total, a.per_bucket, a.keywords);
    }
    std::fs::remove_dir_all(&out)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
