//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod graphml;
pub mod oracles;
pub mod published;
pub mod stub;

use std::path::{Path, PathBuf};

use assocmine::{Pipeline, PipelineConfig, RunOptions, Stage};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/brand_product")
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn demo_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::load(&data_dir().join("brand_product.conf")).expect("demo config");
    c.out_dir = out.to_path_buf();
    c
}

/// Run every stage of the brand/product demo into `out`.
pub fn run_demo(out: &Path, threads: Option<usize>) -> Pipeline {
    let options = RunOptions {
        threads,
        ..RunOptions::default()
    };
    let p = Pipeline::new(demo_config(out), options);
    p.run(&Stage::ALL).expect("demo pipeline");
    p
}

/// The artifacts frozen under `tests/golden`.
pub const GOLDEN_FILES: [&str; 3] = ["pairs.jsonl", "heatmap.csv", "graph.json"];

/// Names of golden files whose bytes differ from `out`.
pub fn golden_mismatches(out: &Path) -> Vec<String> {
    GOLDEN_FILES
        .iter()
        .filter(|f| {
            let want = std::fs::read(golden_dir().join(f)).expect("golden file");
            std::fs::read(out.join(f)).ok().as_deref() != Some(want.as_slice())
        })
        .map(|f| f.to_string())
        .collect()
}
