//! Turn pair counts into a co-occurrence graph, query a node's neighbors
//! and export GraphML, DOT and JSON.
//!
//! cargo run --example graph_export

use std::collections::BTreeSet;
use std::error::Error;

use assocmine::associate::{ordered_pair, BucketRange};
use assocmine::graph::{build_graph, export_graph, GraphFormat};
use assocmine::{CoocRecord, EntityCatalog, EntityType, WindowLevel};

fn record(a: &str, b: &str, bucket: &str, count: u64, keyword: &str) -> CoocRecord {
    CoocRecord {
        pair: ordered_pair(a, b),
        window: WindowLevel::Sentence,
        bucket: bucket.into(),
        count,
        keywords: BTreeSet::from([keyword.to_string()]),
        example_refs: Vec::new(),
    }
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let records = vec![
        record("fidelity", "bitcoin etf", "2021", 3, "launch"),
        record("fidelity", "bitcoin etf", "2022", 1, "trending"),
        record("fidelity", "bitcoin fund", "2020", 1, "launch"),
        record("fidelity", "spot bitcoin etf", "2022", 2, "filed"),
        record("invesco", "bitcoin etf", "2021", 1, "launch"),
        record("vanguard", "target date fund", "2019", 2, "popular"),
    ];
    let mut catalog = EntityCatalog::default();
    for (id, label, ty) in [
        ("fidelity", "Fidelity", EntityType::Org),
        ("invesco", "Invesco", EntityType::Org),
        ("vanguard", "Vanguard", EntityType::Org),
    ] {
        catalog.entries.insert(
            id.into(),
            assocmine::extract::CatalogEntry { label: label.into(), entity_type: ty, doc_count: 1 },
        );
    }

    let graph = build_graph(&records, &catalog, 1)?;
    println!("{} nodes, {} edges", graph.nodes.len(), graph.edges.len());
    for n in graph.neighbors("fidelity", None, &BucketRange::all(), 1) {
        println!("  fidelity -- {} ({}) {:?}", n.node.label, n.weight, n.keywords);
    }
    let recent = graph.neighbors("fidelity", None, &BucketRange::between("2022", "2022"), 1);
    println!("  in 2022 only: {:?}", recent.iter().map(|n| (&n.node.label, n.weight)).collect::<Vec<_>>());

    for format in [GraphFormat::GraphMl, GraphFormat::Dot, GraphFormat::Json] {
        let bytes = export_graph(&graph, format)?;
        println!("{} export: {} bytes", format.extension(), bytes.len());
    }
    print!("{}", String::from_utf8(export_graph(&graph, GraphFormat::Dot)?)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
