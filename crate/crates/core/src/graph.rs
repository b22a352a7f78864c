//! Typed, weighted, undirected co-occurrence graph with GraphML / DOT / JSON
//! export, plus CSV heatmap export for trend matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::associate::{bucket_order, BucketRange, Bucketing, CoocRecord, TrendMatrix, WindowLevel};
use crate::extract::{EntityCatalog, EntityType};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("records mix window levels {0} and {1}")]
    MixedWindows(WindowLevel, WindowLevel),
    #[error("min_count must be at least 1")]
    ZeroMinCount,
    #[error("unknown graph format {0:?} (expected graphml, dot or json)")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub canonical_id: String,
    pub label: String,
    pub entity_type: EntityType,
    pub mention_doc_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub weight: u64,
    pub per_bucket: BTreeMap<String, u64>,
    pub keywords: BTreeSet<String>,
    pub window: WindowLevel,
}

impl Edge {
    fn other(&self, id: &str) -> Option<&str> {
        if self.a == id {
            Some(&self.b)
        } else if self.b == id {
            Some(&self.a)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub window: Option<WindowLevel>,
    pub bucketing: Option<Bucketing>,
    pub min_count: u64,
    pub corpus_fingerprint: Option<String>,
}

/// Nodes sorted by id, edges sorted by (a, b).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoocGraph {
    pub meta: GraphMeta,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor<'g> {
    pub node: &'g Node,
    pub weight: u64,
    pub keywords: &'g BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    GraphMl,
    Dot,
    Json,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::GraphMl => "graphml",
            GraphFormat::Dot => "dot",
            GraphFormat::Json => "json",
        }
    }
}

impl FromStr for GraphFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "graphml" => Ok(GraphFormat::GraphMl),
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            _ => Err(GraphError::UnknownFormat(s.to_string())),
        }
    }
}

/// Aggregate records across buckets into edges of total weight ≥
/// `min_count`. Only endpoints of surviving edges become nodes.
pub fn build_graph(
    records: &[CoocRecord],
    catalog: &EntityCatalog,
    min_count: u64,
) -> Result<CoocGraph, GraphError> {
    if min_count == 0 {
        return Err(GraphError::ZeroMinCount);
    }
    let window = records.first().map(|r| r.window);
    let mut edges: BTreeMap<(&str, &str), Edge> = BTreeMap::new();
    for r in records {
        if let Some(w) = window.filter(|&w| w != r.window) {
            return Err(GraphError::MixedWindows(w, r.window));
        }
        let e = edges
            .entry((r.pair.0.as_str(), r.pair.1.as_str()))
            .or_insert_with(|| Edge {
                a: r.pair.0.clone(),
                b: r.pair.1.clone(),
                weight: 0,
                per_bucket: BTreeMap::new(),
                keywords: BTreeSet::new(),
                window: r.window,
            });
        e.weight += r.count;
        *e.per_bucket.entry(r.bucket.clone()).or_default() += r.count;
        e.keywords.extend(r.keywords.iter().cloned());
    }
    let edges: Vec<Edge> = edges
        .into_values()
        .filter(|e| e.weight >= min_count && e.a != e.b)
        .collect();
    let ids: BTreeSet<&str> = edges
        .iter()
        .flat_map(|e| [e.a.as_str(), e.b.as_str()])
        .collect();
    let nodes = ids
        .into_iter()
        .map(|id| {
            let entry = catalog.get(id);
            Node {
                canonical_id: id.to_string(),
                label: catalog.label(id).to_string(),
                entity_type: entry.map_or(EntityType::Other, |e| e.entity_type),
                mention_doc_count: entry.map_or(0, |e| e.doc_count as u64),
            }
        })
        .collect();
    Ok(CoocGraph {
        meta: GraphMeta {
            window,
            bucketing: None,
            min_count,
            corpus_fingerprint: None,
        },
        nodes,
        edges,
    })
}

impl CoocGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes
            .binary_search_by(|n| n.canonical_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&Edge> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.a.as_str(), e.b.as_str()).cmp(&(a, b)))
            .ok()
            .map(|i| &self.edges[i])
    }

    /// Neighbors of `entity` whose weight restricted to `buckets` is at least
    /// `min_weight`, heaviest first, then by label.
    pub fn neighbors(
        &self,
        entity: &str,
        entity_type: Option<EntityType>,
        buckets: &BucketRange,
        min_weight: u64,
    ) -> Vec<Neighbor<'_>> {
        if self.node(entity).is_none() {
            log::warn!("entity {entity:?} is not in the graph");
            return Vec::new();
        }
        let mut out: Vec<Neighbor<'_>> = self
            .edges
            .iter()
            .filter_map(|e| {
                let node = self.node(e.other(entity)?)?;
                if entity_type.is_some_and(|t| t != node.entity_type) {
                    return None;
                }
                let weight: u64 = e
                    .per_bucket
                    .iter()
                    .filter(|(b, _)| buckets.contains(b))
                    .map(|(_, c)| c)
                    .sum();
                (weight >= min_weight.max(1)).then_some(Neighbor {
                    node,
                    weight,
                    keywords: &e.keywords,
                })
            })
            .collect();
        out.sort_by(|x, y| {
            y.weight
                .cmp(&x.weight)
                .then_with(|| x.node.label.cmp(&y.node.label))
                .then_with(|| x.node.canonical_id.cmp(&y.node.canonical_id))
        });
        out
    }

    fn buckets(&self) -> Vec<&str> {
        let mut b: Vec<&str> = self
            .edges
            .iter()
            .flat_map(|e| e.per_bucket.keys().map(String::as_str))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        b.sort_by(|x, y| bucket_order(x, y));
        b
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

fn join_keywords(k: &BTreeSet<String>) -> String {
    k.iter().map(String::as_str).collect::<Vec<_>>().join("|")
}

pub fn to_graphml(g: &CoocGraph) -> String {
    let buckets = g.buckets();
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    let keys = [
        ("label", "node", "label", "string"),
        ("type", "node", "type", "string"),
        ("doc_count", "node", "doc_count", "long"),
        ("weight", "edge", "weight", "long"),
        ("keywords", "edge", "keywords", "string"),
        ("window", "edge", "window", "string"),
    ];
    for (id, domain, name, ty) in keys {
        let _ = writeln!(
            s,
            "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{name}\" attr.type=\"{ty}\"/>"
        );
    }
    for (i, b) in buckets.iter().enumerate() {
        let _ = writeln!(
            s,
            "  <key id=\"b{i}\" for=\"edge\" attr.name=\"{}\" attr.type=\"long\"/>",
            xml_escape(b)
        );
    }
    s.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for n in &g.nodes {
        let _ = writeln!(s, "    <node id=\"{}\">", xml_escape(&n.canonical_id));
        let _ = writeln!(s, "      <data key=\"label\">{}</data>", xml_escape(&n.label));
        let _ = writeln!(s, "      <data key=\"type\">{}</data>", n.entity_type);
        let _ = writeln!(s, "      <data key=\"doc_count\">{}</data>", n.mention_doc_count);
        s.push_str("    </node>\n");
    }
    for e in &g.edges {
        let _ = writeln!(
            s,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(&e.a),
            xml_escape(&e.b)
        );
        let _ = writeln!(s, "      <data key=\"weight\">{}</data>", e.weight);
        let _ = writeln!(
            s,
            "      <data key=\"keywords\">{}</data>",
            xml_escape(&join_keywords(&e.keywords))
        );
        let _ = writeln!(s, "      <data key=\"window\">{}</data>", e.window);
        for (i, b) in buckets.iter().enumerate() {
            if let Some(c) = e.per_bucket.get(*b) {
                let _ = writeln!(s, "      <data key=\"b{i}\">{c}</data>");
            }
        }
        s.push_str("    </edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

pub fn to_dot(g: &CoocGraph) -> String {
    let mut s = String::from("graph cooc {\n");
    for n in &g.nodes {
        let _ = writeln!(
            s,
            "  \"{}\" [label=\"{}\", type=\"{}\", doc_count={}];",
            dot_escape(&n.canonical_id),
            dot_escape(&n.label),
            n.entity_type,
            n.mention_doc_count
        );
    }
    for e in &g.edges {
        let _ = writeln!(
            s,
            "  \"{}\" -- \"{}\" [label=\"{}\", weight={}, keywords=\"{}\"];",
            dot_escape(&e.a),
            dot_escape(&e.b),
            e.weight,
            e.weight,
            dot_escape(&join_keywords(&e.keywords))
        );
    }
    s.push_str("}\n");
    s
}

pub fn to_json(g: &CoocGraph) -> Result<String, GraphError> {
    let mut s = serde_json::to_string_pretty(g)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<CoocGraph, GraphError> {
    Ok(serde_json::from_str(s)?)
}

pub fn export_graph(g: &CoocGraph, format: GraphFormat) -> Result<Vec<u8>, GraphError> {
    Ok(match format {
        GraphFormat::GraphMl => to_graphml(g),
        GraphFormat::Dot => to_dot(g),
        GraphFormat::Json => to_json(g)?,
    }
    .into_bytes())
}

/// CSV with header `entity,<buckets…>,total`, rows in matrix order, LF line
/// endings.
pub fn export_heatmap(m: &TrendMatrix) -> Result<Vec<u8>, GraphError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["entity".to_string()];
    header.extend(m.buckets.iter().cloned());
    header.push("total".into());
    w.write_record(&header)?;
    for row in &m.rows {
        let mut rec = vec![row.label.clone()];
        rec.extend(row.cells.iter().map(u64::to_string));
        rec.push(row.total.to_string());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| GraphError::Csv(e.into_error().into()))
}
