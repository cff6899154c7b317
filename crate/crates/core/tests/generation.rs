use std::time::{Duration, Instant};

use chrono::NaiveDate;
use headqa_core::corpus::load_corpus_file;
use headqa_core::decompose::{decompose_document, NoLexicon};
use headqa_core::generate::{
    generate, AnswererError, LeadAnswerer, OracleAnswerer, RemoteAnswerer, DEFAULT_MAX_STEPS,
};
use headqa_core::Document;
use headqa_testkit::fixtures;
use headqa_testkit::stub::{self, Reply};
use serde_json::json;

fn doc(title: &str, text: &str) -> Document {
    Document {
        doc_id: "g".into(),
        source: "example.com".into(),
        published_at: NaiveDate::from_ymd_opt(2018, 12, 10).unwrap(),
        title: title.into(),
        text: text.into(),
    }
}

#[test]
fn oracle_round_trip_on_fixture_corpus() {
    let started = Instant::now();
    let docs = load_corpus_file(fixtures::path("corpus.jsonl"))
        .unwrap()
        .documents;
    let mut checked = 0;
    for d in &docs {
        let Some(dec) = decompose_document(d, &NoLexicon) else {
            continue;
        };
        let oracle = OracleAnswerer::new(&dec).unwrap();
        let trace = generate(d, &oracle, DEFAULT_MAX_STEPS).unwrap();
        assert_eq!(trace.headline.as_bytes(), d.title.as_bytes());
        assert_eq!(trace.steps.len(), dec.spans.len() + 1);
        assert!(trace.completed);
        checked += 1;
    }
    assert_eq!(checked, 150);
    assert!(started.elapsed() < Duration::from_secs(5));
}

#[test]
fn lead_answerer_gives_two_step_traces() {
    let d = doc("x", "Rain is expected on Monday. Roads may close.");
    let trace = generate(&d, &LeadAnswerer::new(20), DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(trace.steps.len(), 2);
    assert_eq!(trace.headline, "Rain is expected on Monday.");
    assert_eq!(trace.steps[0].answer_char_start, Some(0));
}

#[test]
fn remote_answerer_uses_stub_spans() {
    let url = stub::serve(|req| {
        if req["question"] == "" {
            Reply::json(json!({"answer": "Mayor Ruiz", "answer_start": 4, "is_termination": false}))
        } else if req["question"] == "Mayor Ruiz" {
            Reply::json(json!({"answer": " resigns", "answer_start": 14, "is_termination": false}))
        } else {
            let n = req["text"].as_str().unwrap().chars().count() as i64;
            Reply::json(json!({"answer": "_", "answer_start": n - 1, "is_termination": true}))
        }
    });
    let d = doc("Mayor Ruiz resigns", "The Mayor Ruiz resigns today.");
    let remote = RemoteAnswerer::new(url, 2_000, 2);
    let trace = generate(&d, &remote, DEFAULT_MAX_STEPS).unwrap();
    assert_eq!(trace.headline, "Mayor Ruiz resigns");
    assert_eq!(trace.steps.len(), 3);
    assert!(trace.completed);
    assert_eq!(
        trace.steps[2].answer_char_start,
        Some(d.text.chars().count() + 1)
    );
}

#[test]
fn remote_answer_must_be_a_substring() {
    let url = stub::serve(|_| {
        Reply::json(json!({"answer": "Governor", "answer_start": 0, "is_termination": false}))
    });
    let d = doc("t", "The Mayor spoke.");
    let err = generate(&d, &RemoteAnswerer::new(url, 2_000, 1), 4).unwrap_err();
    assert!(
        matches!(err.source, AnswererError::NotASubstring { .. }),
        "{err:?}"
    );
    assert!(err.partial.steps.is_empty());
    assert!(err.partial.error.is_some());
}

#[test]
fn remote_timeout_aborts() {
    let url = stub::serve(|_| Reply {
        delay: Duration::from_millis(1_500),
        ..Reply::json(json!({"answer": "The", "answer_start": 0, "is_termination": false}))
    });
    let d = doc("t", "The Mayor spoke.");
    let err = generate(&d, &RemoteAnswerer::new(url, 200, 1), 4).unwrap_err();
    assert!(matches!(err.source, AnswererError::Timeout), "{err:?}");
}

#[test]
fn remote_error_status_is_malformed() {
    let url = stub::serve(|_| Reply {
        status: 500,
        ..Reply::json(json!({"oops": true}))
    });
    let d = doc("t", "The Mayor spoke.");
    let err = generate(&d, &RemoteAnswerer::new(url, 2_000, 1), 4).unwrap_err();
    assert!(matches!(err.source, AnswererError::Malformed(_)), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let d = doc("t", "The Mayor spoke.");
    let err = generate(
        &d,
        &RemoteAnswerer::new("http://127.0.0.1:9/answer", 1_000, 1),
        4,
    )
    .unwrap_err();
    assert!(
        matches!(
            err.source,
            AnswererError::Transport(_) | AnswererError::Timeout
        ),
        "{err:?}"
    );
}
