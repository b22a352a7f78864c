//! Structural GraphML validation following the constraints of the GraphML
//! 1.0 schema: element placement, required attributes and their enumerated
//! values, key references, id uniqueness, edge endpoints and typed data.

use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document, Node};

pub const NS: &str = "http://graphml.graphdrawing.org/xmlns";

const KEY_FOR: [&str; 8] = ["all", "graphml", "graph", "node", "edge", "hyperedge", "port", "endpoint"];
const ATTR_TYPES: [&str; 6] = ["boolean", "int", "long", "float", "double", "string"];

struct Key {
    domain: String,
    ty: String,
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

fn require<'a>(n: Node<'a, '_>, attr: &str) -> Result<&'a str, String> {
    n.attribute(attr)
        .ok_or_else(|| format!("<{}> missing required attribute {attr}", n.tag_name().name()))
}

fn check_value(ty: &str, v: &str) -> Result<(), String> {
    let ok = match ty {
        "boolean" => v == "true" || v == "false",
        "int" => v.trim().parse::<i32>().is_ok(),
        "long" => v.trim().parse::<i64>().is_ok(),
        "float" | "double" => v.trim().parse::<f64>().is_ok(),
        _ => true,
    };
    if ok { Ok(()) } else { Err(format!("value {v:?} is not a valid {ty}")) }
}

fn check_data(n: Node, keys: &BTreeMap<String, Key>, domain: &str) -> Result<(), String> {
    let id = require(n, "key")?;
    let key = keys.get(id).ok_or_else(|| format!("data references undeclared key {id}"))?;
    if key.domain != domain && key.domain != "all" {
        return Err(format!("key {id} is for {} but used on {domain}", key.domain));
    }
    check_value(&key.ty, n.text().unwrap_or(""))
}

pub fn validate(xml: &str) -> Result<(), String> {
    let doc = Document::parse(xml).map_err(|e| format!("not well-formed: {e}"))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" || root.tag_name().namespace() != Some(NS) {
        return Err("root must be graphml in the GraphML namespace".into());
    }
    let mut keys = BTreeMap::new();
    let mut seen_graph = false;
    for child in elements(root) {
        if child.tag_name().namespace() != Some(NS) {
            continue;
        }
        match child.tag_name().name() {
            "desc" => {}
            "key" => {
                if seen_graph {
                    return Err("key declared after graph".into());
                }
                let id = require(child, "id")?.to_string();
                let domain = child.attribute("for").unwrap_or("all").to_string();
                if !KEY_FOR.contains(&domain.as_str()) {
                    return Err(format!("key {id} has invalid for={domain}"));
                }
                let ty = child.attribute("attr.type").unwrap_or("string").to_string();
                if !ATTR_TYPES.contains(&ty.as_str()) {
                    return Err(format!("key {id} has invalid attr.type={ty}"));
                }
                for d in elements(child).filter(|d| d.tag_name().name() == "default") {
                    check_value(&ty, d.text().unwrap_or(""))?;
                }
                if keys.insert(id.clone(), Key { domain, ty }).is_some() {
                    return Err(format!("duplicate key id {id}"));
                }
            }
            "graph" => {
                seen_graph = true;
                check_graph(child, &keys)?;
            }
            "data" => check_data(child, &keys, "graphml")?,
            other => return Err(format!("unexpected <{other}> under graphml")),
        }
    }
    Ok(())
}

fn check_graph(g: Node, keys: &BTreeMap<String, Key>) -> Result<(), String> {
    let edgedefault = require(g, "edgedefault")?;
    if edgedefault != "directed" && edgedefault != "undirected" {
        return Err(format!("invalid edgedefault={edgedefault}"));
    }
    let mut nodes = BTreeSet::new();
    for n in elements(g).filter(|n| n.tag_name().name() == "node") {
        let id = require(n, "id")?;
        if !nodes.insert(id.to_string()) {
            return Err(format!("duplicate node id {id}"));
        }
        for d in elements(n) {
            match d.tag_name().name() {
                "data" => check_data(d, keys, "node")?,
                "desc" | "port" | "graph" | "locator" => {}
                other => return Err(format!("unexpected <{other}> in node")),
            }
        }
    }
    let mut edge_ids = BTreeSet::new();
    for child in elements(g) {
        match child.tag_name().name() {
            "node" | "desc" | "hyperedge" => {}
            "data" => check_data(child, keys, "graph")?,
            "edge" => {
                if let Some(id) = child.attribute("id") {
                    if !edge_ids.insert(id.to_string()) {
                        return Err(format!("duplicate edge id {id}"));
                    }
                }
                for end in ["source", "target"] {
                    let v = require(child, end)?;
                    if !nodes.contains(v) {
                        return Err(format!("edge {end} {v:?} is not a node"));
                    }
                }
                if let Some(d) = child.attribute("directed") {
                    check_value("boolean", d)?;
                }
                for d in elements(child) {
                    match d.tag_name().name() {
                        "data" => check_data(d, keys, "edge")?,
                        "desc" | "graph" => {}
                        other => return Err(format!("unexpected <{other}> in edge")),
                    }
                }
            }
            other => return Err(format!("unexpected <{other}> in graph")),
        }
    }
    Ok(())
}
