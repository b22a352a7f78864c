//! A local stand-in for an annotation service. Requests are form-decoded and
//! answered from fixtures keyed by the posted `text`; unknown texts get a 503.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;

use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Clone, Deserialize)]
pub struct Fixture {
    pub text: String,
    pub confidence: f64,
    pub response: Value,
    pub expected: Vec<Value>,
    #[serde(default)]
    pub expected_new_records: Vec<Value>,
}

pub fn load_fixture(path: &Path) -> Fixture {
    let raw = std::fs::read_to_string(path).expect("fixture");
    serde_json::from_str(&raw).expect("fixture json")
}

#[derive(Debug, Default)]
pub struct Log {
    /// Every request as decoded form pairs, in arrival order.
    pub requests: Vec<Vec<(String, String)>>,
}

impl Log {
    pub fn hits_for(&self, text: &str) -> usize {
        self.requests
            .iter()
            .filter(|r| r.iter().any(|(k, v)| k == "text" && v == text))
            .count()
    }
}

pub struct StubServer {
    pub url: String,
    pub log: Arc<Mutex<Log>>,
}

impl StubServer {
    pub fn start(fixtures: &[Fixture]) -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}/rest/annotate", listener.local_addr().unwrap());
        let answers: HashMap<String, String> = fixtures
            .iter()
            .map(|f| (f.text.clone(), f.response.to_string()))
            .collect();
        let log = Arc::new(Mutex::new(Log::default()));
        let shared = Arc::clone(&log);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let answers = answers.clone();
                let log = Arc::clone(&shared);
                thread::spawn(move || serve(stream, &answers, &log));
            }
        });
        StubServer { url, log }
    }
}

fn serve(stream: TcpStream, answers: &HashMap<String, String>, log: &Mutex<Log>) {
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
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let form: Vec<(String, String)> = form_urlencoded::parse(&body).into_owned().collect();
    let text = form
        .iter()
        .find(|(k, _)| k == "text")
        .map(|(_, v)| v.clone())
        .unwrap_or_default();
    log.lock().unwrap().requests.push(form);
    let (status, payload) = match answers.get(&text) {
        Some(json) => ("200 OK", json.clone()),
        None => ("503 Service Unavailable", "{}".to_string()),
    };
    let mut stream = reader.into_inner();
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
}

pub const FIXTURES: [(&str, &str); 3] = [
    ("normal", "n1"),
    ("shared_uri", "g1"),
    ("below_threshold", "b1"),
];

pub const SEC_URI: &str = "http://dbpedia.org/resource/U.S._Securities_and_Exchange_Commission";

pub fn all_fixtures() -> Vec<Fixture> {
    FIXTURES
        .iter()
        .map(|(name, _)| load_fixture(&super::fixture_dir().join(format!("annotator/{name}.json"))))
        .collect()
}

pub fn annotator(url: &str, confidence: f64) -> assocmine::extract::ExternalAnnotator {
    use assocmine::extract::{AnnotatorConfig, EntityRecord, EntityType, ExternalAnnotator, Registry};
    let registry = Registry::new(vec![EntityRecord {
        canonical_id: "sec".into(),
        canonical_name: "SEC".into(),
        entity_type: EntityType::Org,
        aliases: vec!["Securities and Exchange Commission".into()],
        uri: Some(SEC_URI.into()),
    }])
    .unwrap();
    let mut config = AnnotatorConfig::new(url);
    config.confidence = confidence;
    config.max_retries = 2;
    config.retry_backoff = std::time::Duration::from_millis(5);
    config.timeout = std::time::Duration::from_secs(5);
    config.type_map = vec![("DBpedia:Company".into(), EntityType::Org)];
    ExternalAnnotator::new(config, registry)
}

/// Annotate one fixture's text and compare with its expected mentions and
/// new registry rows.
pub fn check_fixture(server: &StubServer, fixture: &Fixture, article_id: &str) -> Result<(), String> {
    use assocmine::Segmenter;
    let doc = Segmenter::default().segment_text(article_id, &fixture.text);
    let got = annotator(&server.url, fixture.confidence)
        .try_annotate(&doc)
        .map_err(|e| e.to_string())?;
    let mentions = serde_json::to_value(&got.mentions).unwrap();
    if mentions != Value::Array(fixture.expected.clone()) {
        return Err(format!("{article_id}: mentions {mentions} != expected"));
    }
    let records = serde_json::to_value(&got.new_records).unwrap();
    if records != Value::Array(fixture.expected_new_records.clone()) {
        return Err(format!("{article_id}: new records {records} != expected"));
    }
    if got.skipped || got.dropped != 0 {
        return Err(format!("{article_id}: skipped={} dropped={}", got.skipped, got.dropped));
    }
    Ok(())
}

pub const FAILING_TEXT: &str = "Nobody answers for this one.";

/// A document the server refuses is retried `max_retries` times, then
/// skipped, while the other documents in the batch still annotate.
pub fn check_failure(server: &StubServer, normal: &Fixture) -> Result<(), String> {
    use assocmine::Segmenter;
    let seg = Segmenter::default();
    let docs = [seg.segment_text("f1", FAILING_TEXT), seg.segment_text("n1", &normal.text)];
    let a = annotator(&server.url, normal.confidence);
    let out = a.annotate_all(&docs).map_err(|e| e.to_string())?;
    let hits = server.log.lock().unwrap().hits_for(FAILING_TEXT);
    let attempts = a.config().max_retries as usize + 1;
    if hits != attempts {
        return Err(format!("failing document requested {hits} times, expected {attempts}"));
    }
    if !out[0].skipped || !out[0].mentions.is_empty() {
        return Err("failing document was not skipped".into());
    }
    if out[1].skipped || out[1].mentions.len() != normal.expected.len() {
        return Err("healthy document in the same batch was affected".into());
    }
    Ok(())
}
