mod common;

use assocmine::extract::annotate_external;
use assocmine::extract::AnnotatorConfig;
use assocmine::Segmenter;
use common::stub::{self, StubServer};

#[test]
fn replayed_fixtures_match_expected_mentions() {
    let fixtures = stub::all_fixtures();
    let server = StubServer::start(&fixtures);
    for (fixture, (_, id)) in fixtures.iter().zip(stub::FIXTURES) {
        stub::check_fixture(&server, fixture, id).unwrap();
    }
}

#[test]
fn request_is_form_encoded_with_confidence() {
    let fixtures = stub::all_fixtures();
    let server = StubServer::start(&fixtures);
    stub::check_fixture(&server, &fixtures[0], "n1").unwrap();
    let log = server.log.lock().unwrap();
    let form = &log.requests[0];
    assert!(form.contains(&("text".to_string(), fixtures[0].text.clone())));
    assert!(form.contains(&("confidence".to_string(), "0.5".to_string())));
}

#[test]
fn failing_document_retried_then_skipped() {
    let fixtures = stub::all_fixtures();
    let server = StubServer::start(&fixtures);
    stub::check_failure(&server, &fixtures[0]).unwrap();
}

#[test]
fn unreachable_endpoint_yields_no_mentions() {
    // bind then drop, so nothing listens on the port
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut config = AnnotatorConfig::new(format!("http://127.0.0.1:{port}/rest/annotate"));
    config.max_retries = 1;
    config.retry_backoff = std::time::Duration::from_millis(1);
    let doc = Segmenter::default().segment_text("x", "The SEC met.");
    assert!(annotate_external(&config, &doc, 0.5).is_empty());
}

#[test]
fn threshold_argument_overrides_config() {
    let fixtures = stub::all_fixtures();
    let server = StubServer::start(&fixtures);
    let below = &fixtures[2];
    let doc = Segmenter::default().segment_text("b1", &below.text);
    let config = AnnotatorConfig::new(server.url.clone());
    let all = annotate_external(&config, &doc, 0.1);
    assert_eq!(
        all.iter().map(|m| m.surface.as_str()).collect::<Vec<_>>(),
        ["Reuters", "lawsuit", "Wells Fargo"]
    );
}
