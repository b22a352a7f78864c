//! Link entities through an external annotation service.
//!
//! The example starts a tiny canned annotator on localhost that answers in
//! the usual `Resources` JSON shape, so it runs offline. Point
//! `AnnotatorConfig::new` at a real endpoint to annotate for real.
//!
//! cargo run --example external_annotator

use std::error::Error;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use assocmine::corpus::Segmenter;
use assocmine::extract::{AnnotatorConfig, EntityRecord, EntityType, ExternalAnnotator, Registry};

const CANNED: &str = r#"{"@text": "", "Resources": [
  {"@URI": "http://dbpedia.org/resource/U.S._Securities_and_Exchange_Commission",
   "@surfaceForm": "SEC", "@offset": "4", "@similarityScore": "0.998",
   "@types": "DBpedia:Organisation,DBpedia:GovernmentAgency"},
  {"@URI": "http://dbpedia.org/resource/Morgan_Stanley",
   "@surfaceForm": "Morgan Stanley", "@offset": "14", "@similarityScore": "0.97",
   "@types": "DBpedia:Organisation,DBpedia:Company"},
  {"@URI": "http://dbpedia.org/resource/Tuesday",
   "@surfaceForm": "Tuesday", "@offset": "32", "@similarityScore": "0.21",
   "@types": ""}
]}"#;

/// Answer `requests` POSTs with the canned body; returns the endpoint URL.
fn canned_annotator(requests: usize) -> std::io::Result<String> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}/rest/annotate", listener.local_addr()?);
    thread::spawn(move || {
        for stream in listener.incoming().take(requests).flatten() {
            let mut reader = BufReader::new(stream);
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0; length];
            let _ = reader.read_exact(&mut body);
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                CANNED.len(),
                CANNED
            );
        }
    });
    Ok(url)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let url = canned_annotator(1)?;
    let registry = Registry::new(vec![EntityRecord {
        canonical_id: "sec".into(),
        canonical_name: "SEC".into(),
        entity_type: EntityType::Org,
        aliases: vec!["Securities and Exchange Commission".into()],
        uri: Some("http://dbpedia.org/resource/U.S._Securities_and_Exchange_Commission".into()),
    }])?;
    let mut config = AnnotatorConfig::new(url);
    config.type_map = vec![("DBpedia:Company".into(), EntityType::Org)];
    let annotator = ExternalAnnotator::new(config, registry);

    let doc = Segmenter::default().segment_text("n1", "The SEC fined Morgan Stanley on Tuesday.");
    let annotation = annotator.try_annotate(&doc)?;
    for m in &annotation.mentions {
        println!("{:<16} -> {} ({})", m.surface, m.canonical_id, m.entity_type);
    }
    for r in &annotation.new_records {
        println!("new entity: {} named {:?}", r.canonical_id, r.canonical_name);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
