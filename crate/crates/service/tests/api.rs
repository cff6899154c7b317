use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use headqa_core::stats::{read_score_records, ScoreMatrix, TitleKind};
use headqa_service::store::presentation_orders;
use headqa_service::{router, ExportRow, Store, INSTRUCTIONS};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
    /// Every JSON body the API returned, for the blinding scan.
    seen: Vec<Value>,
}

impl Client {
    fn new() -> Self {
        Self::with_store(Store::in_memory().unwrap())
    }

    fn with_store(store: Store) -> Self {
        Client {
            app: router(Arc::new(store)),
            seen: Vec::new(),
        }
    }

    async fn raw(&mut self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, String) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self
            .app
            .clone()
            .oneshot(req.body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn call(&mut self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (status, text) = self.raw(method, uri, body).await;
        let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{uri}: {e}: {text}"));
        self.seen.push(v.clone());
        (status, v)
    }
}

fn docs(n: usize) -> Vec<Value> {
    (0..n)
        .map(|i| {
            json!({
                "id": format!("doc-{i:03}"),
                "source": format!("source{i}.example"),
                "published_at": "2018-12-11",
                "title": format!("Council approves budget {i}"),
                "text": format!("The council met on Monday and approved budget number {i}."),
                "generated_title": format!("Council budget {i} approved"),
            })
        })
        .collect()
}

async fn study(c: &mut Client, n: usize, config: Value) -> String {
    let (status, v) = c
        .call(
            "POST",
            "/studies",
            Some(json!({"documents": docs(n), "config": config})),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_eq!(v["tasks"], n);
    v["study_id"].as_str().unwrap().to_owned()
}

async fn session(c: &mut Client, study: &str, evaluator: &str) -> (StatusCode, Value) {
    c.call(
        "POST",
        &format!("/studies/{study}/sessions"),
        Some(json!({"evaluator_id": evaluator})),
    )
    .await
}

fn keys_containing(v: &Value, needle: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if k.contains(needle) {
                    out.push(k.clone());
                }
                keys_containing(child, needle, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|i| keys_containing(i, needle, out)),
        _ => {}
    }
}

async fn export_rows(c: &mut Client, study: &str) -> Vec<ExportRow> {
    let (status, text) = c
        .raw("GET", &format!("/studies/{study}/export"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[tokio::test]
async fn scripted_hundred_task_session_stays_blind() {
    let mut c = Client::new();
    let st = study(&mut c, 100, json!({"seed": 42})).await;
    c.seen.clear();
    let (status, s) = session(&mut c, &st, "ann").await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(s["progress"]["total"], 100);
    let se = s["session_id"].as_str().unwrap().to_owned();
    let mut scored = 0;
    loop {
        let (status, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
        assert_eq!(status, StatusCode::OK, "{next}");
        if next["done"] == true {
            break;
        }
        let task = next["task"]["task_id"].as_str().unwrap().to_owned();
        let scores = json!({"scores": [scored % 5, (scored * 3) % 5]});
        let (status, ack) = c
            .call(
                "POST",
                &format!("/sessions/{se}/tasks/{task}/scores"),
                Some(scores),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{ack}");
        scored += 1;
        assert_eq!(ack["progress"]["done"], scored);
    }
    assert_eq!(scored, 100);
    let mut leaks = Vec::new();
    for v in &c.seen {
        keys_containing(v, "kind", &mut leaks);
    }
    assert!(leaks.is_empty(), "kind fields in responses: {leaks:?}");
    assert!(c.seen.len() > 200);

    let rows = export_rows(&mut c, &st).await;
    assert_eq!(rows.len(), 2 * scored);
    assert!(rows.iter().all(|r| r.session_complete));
}

#[tokio::test]
async fn scores_are_unblinded_by_position() {
    let mut c = Client::new();
    let st = study(&mut c, 3, json!({"seed": 5})).await;
    let (_, s) = session(&mut c, &st, "bo").await;
    let se = s["session_id"].as_str().unwrap().to_owned();
    let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    let task = &next["task"];
    let first_is_generated = task["titles"][0]["text"]
        .as_str()
        .unwrap()
        .ends_with("approved");
    let uri = format!(
        "/sessions/{se}/tasks/{}/scores",
        task["task_id"].as_str().unwrap()
    );
    let (status, _) = c.call("POST", &uri, Some(json!({"scores": [3, 1]}))).await;
    assert_eq!(status, StatusCode::OK);
    let rows = export_rows(&mut c, &st).await;
    let get = |k: TitleKind| {
        rows.iter()
            .find(|r| r.record.title_kind == k)
            .unwrap()
            .record
            .score
            .value()
    };
    if first_is_generated {
        assert_eq!((get(TitleKind::Generated), get(TitleKind::Real)), (3, 1));
    } else {
        assert_eq!((get(TitleKind::Real), get(TitleKind::Generated)), (3, 1));
    }
    assert!(rows.iter().all(|r| !r.session_complete));
    assert_eq!(rows[0].record.doc_id, task["doc_id"].as_str().unwrap());
}

#[tokio::test]
async fn submission_errors_and_idempotence() {
    let mut c = Client::new();
    let st = study(&mut c, 2, json!({})).await;
    let (_, s) = session(&mut c, &st, "cy").await;
    let se = s["session_id"].as_str().unwrap().to_owned();
    let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    let uri = format!(
        "/sessions/{se}/tasks/{}/scores",
        next["task"]["task_id"].as_str().unwrap()
    );

    let (status, v) = c.call("POST", &uri, Some(json!({"scores": [5, 1]}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "score_out_of_range");
    assert!(v["error"]["message"].is_string());
    let (status, _) = c.call("POST", &uri, Some(json!({"scores": [-1, 1]}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, v) = c.call("POST", &uri, Some(json!({"scores": [2]}))).await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_request"))
    );
    let (status, _) = c.call("POST", &uri, Some(json!({"score": [2, 2]}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, ack) = c.call("POST", &uri, Some(json!({"scores": [2, 4]}))).await;
    assert_eq!(
        (status, ack["duplicate"].as_bool()),
        (StatusCode::OK, Some(false))
    );
    let (status, ack) = c.call("POST", &uri, Some(json!({"scores": [2, 4]}))).await;
    assert_eq!(
        (status, ack["duplicate"].as_bool()),
        (StatusCode::OK, Some(true))
    );
    assert_eq!(export_rows(&mut c, &st).await.len(), 2);
    let (status, v) = c.call("POST", &uri, Some(json!({"scores": [4, 2]}))).await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::CONFLICT, Some("conflict"))
    );

    let (status, v) = c
        .call(
            "POST",
            &format!("/sessions/{se}/tasks/tk-999999/scores"),
            Some(json!({"scores": [1, 1]})),
        )
        .await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("not_found"))
    );
    let (status, _) = c.call("GET", "/sessions/se-424242/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = c.call("GET", "/sessions/bogus/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = c.call("GET", "/studies/st-000077/export", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, v) = c.call("GET", "/nowhere", None).await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("not_found"))
    );
}

#[tokio::test]
async fn resume_then_done_marker_then_complete() {
    let mut c = Client::new();
    let st = study(&mut c, 2, json!({})).await;
    let (_, s) = session(&mut c, &st, "di").await;
    let se = s["session_id"].as_str().unwrap().to_owned();
    let (_, first) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    let t1 = first["task"]["task_id"].as_str().unwrap().to_owned();
    c.call(
        "POST",
        &format!("/sessions/{se}/tasks/{t1}/scores"),
        Some(json!({"scores": [1, 2]})),
    )
    .await;

    // same evaluator again: the active session comes back
    let (status, again) = session(&mut c, &st, "di").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["session_id"], se.as_str());
    assert_eq!(again["progress"]["done"], 1);
    let (_, second) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    let t2 = second["task"]["task_id"].as_str().unwrap().to_owned();
    assert_ne!(t1, t2);
    c.call(
        "POST",
        &format!("/sessions/{se}/tasks/{t2}/scores"),
        Some(json!({"scores": [3, 3]})),
    )
    .await;

    let (status, done) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(done["done"], true);
    assert_eq!(done["progress"], json!({"done": 2, "total": 2}));
    let (status, v) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::CONFLICT, Some("session_complete"))
    );
    let (status, v) = session(&mut c, &st, "di").await;
    assert_eq!(
        (status, v["error"]["code"].as_str()),
        (StatusCode::CONFLICT, Some("nothing_left"))
    );
}

#[tokio::test]
async fn study_validation() {
    let mut c = Client::new();
    let (status, _) = c
        .call("POST", "/studies", Some(json!({"documents": []})))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut same = docs(2);
    same[1]["source"] = same[0]["source"].clone();
    let (status, v) = c
        .call("POST", "/studies", Some(json!({"documents": same.clone()})))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    let (status, _) = c
        .call(
            "POST",
            "/studies",
            Some(json!({"documents": same, "config": {"one_per_source": false}})),
        )
        .await;
    assert_eq!(status, StatusCode::CREATED);

    let mut missing = docs(2);
    missing[0]
        .as_object_mut()
        .unwrap()
        .remove("generated_title");
    let (status, _) = c
        .call("POST", "/studies", Some(json!({"documents": missing})))
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, _) = c
        .call(
            "POST",
            "/studies",
            Some(json!({"documents": docs(2), "config": {"allowed_sources": ["source0.example"]}})),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = c
        .call(
            "POST",
            "/studies",
            Some(json!({"documents": docs(1), "config": {"batch_size": 0}})),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn batches_split_large_studies() {
    let mut c = Client::new();
    let st = study(&mut c, 5, json!({"batch_size": 2})).await;
    let mut seen_docs = Vec::new();
    for expected in [2, 2, 1] {
        let (status, s) = session(&mut c, &st, "ed").await;
        assert_eq!(status, StatusCode::CREATED);
        assert_eq!(s["progress"]["total"], expected);
        let se = s["session_id"].as_str().unwrap().to_owned();
        loop {
            let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
            if next["done"] == true {
                break;
            }
            seen_docs.push(next["task"]["doc_id"].as_str().unwrap().to_owned());
            let uri = format!(
                "/sessions/{se}/tasks/{}/scores",
                next["task"]["task_id"].as_str().unwrap()
            );
            c.call("POST", &uri, Some(json!({"scores": [2, 2]}))).await;
        }
    }
    seen_docs.sort();
    seen_docs.dedup();
    assert_eq!(seen_docs.len(), 5);
    let (status, _) = session(&mut c, &st, "ed").await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, info) = c.call("GET", &format!("/studies/{st}"), None).await;
    assert_eq!(
        (info["sessions"].as_u64(), info["scored_tasks"].as_u64()),
        (Some(3), Some(5))
    );
}

#[tokio::test]
async fn task_and_presentation_order_follow_the_seed() {
    async fn script(seed: u64) -> Vec<(String, String)> {
        let mut c = Client::new();
        let st = study(&mut c, 8, json!({"seed": seed})).await;
        let (_, s) = session(&mut c, &st, "fa").await;
        let se = s["session_id"].as_str().unwrap().to_owned();
        let mut out = Vec::new();
        loop {
            let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
            if next["done"] == true {
                return out;
            }
            let t = &next["task"];
            out.push((
                t["doc_id"].as_str().unwrap().into(),
                t["titles"][0]["text"].as_str().unwrap().into(),
            ));
            let uri = format!(
                "/sessions/{se}/tasks/{}/scores",
                t["task_id"].as_str().unwrap()
            );
            c.call("POST", &uri, Some(json!({"scores": [0, 4]}))).await;
        }
    }
    assert_eq!(script(9).await, script(9).await);
    assert_ne!(script(9).await, script(10).await);
}

#[test]
fn presentation_order_is_balanced() {
    for seed in [0, 1, 2018] {
        let orders = presentation_orders(seed, 1, 10_000);
        let real_first = orders.iter().filter(|&&b| b).count() as f64 / orders.len() as f64;
        assert!(
            (0.48..=0.52).contains(&real_first),
            "seed {seed}: {real_first}"
        );
    }
}

#[tokio::test]
async fn instructions_and_health() {
    let mut c = Client::new();
    let (status, text) = c.raw("GET", "/instructions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, INSTRUCTIONS);
    assert!(text.contains("Factually incorrect"));
    let (status, v) = c.call("GET", "/health", None).await;
    assert_eq!((status, v), (StatusCode::OK, json!({"status": "ok"})));
}

#[tokio::test]
async fn export_feeds_the_stats_reader() {
    let mut c = Client::new();
    let st = study(&mut c, 4, json!({})).await;
    let (_, text) = c.raw("GET", &format!("/studies/{st}/export"), None).await;
    assert!(text.is_empty());
    for ev in ["g1", "g2"] {
        let (_, s) = session(&mut c, &st, ev).await;
        let se = s["session_id"].as_str().unwrap().to_owned();
        for _ in 0..3 {
            let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
            let uri = format!(
                "/sessions/{se}/tasks/{}/scores",
                next["task"]["task_id"].as_str().unwrap()
            );
            c.call("POST", &uri, Some(json!({"scores": [1, 3]}))).await;
        }
    }
    let (_, text) = c.raw("GET", &format!("/studies/{st}/export"), None).await;
    let records = read_score_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 12);
    let m = ScoreMatrix::from_records(&records).unwrap();
    assert_eq!(
        (m.evaluators().len(), m.docs().len(), m.present()),
        (2, 3, 12)
    );
}

#[tokio::test]
async fn file_store_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.sqlite");
    let (st, se) = {
        let mut c = Client::with_store(Store::open(&path).unwrap());
        let st = study(&mut c, 2, json!({})).await;
        let (_, s) = session(&mut c, &st, "hu").await;
        let se = s["session_id"].as_str().unwrap().to_owned();
        let (_, next) = c.call("GET", &format!("/sessions/{se}/next"), None).await;
        let uri = format!(
            "/sessions/{se}/tasks/{}/scores",
            next["task"]["task_id"].as_str().unwrap()
        );
        c.call("POST", &uri, Some(json!({"scores": [4, 4]}))).await;
        (st, se)
    };
    let mut c = Client::with_store(Store::open(&path).unwrap());
    let (status, s) = session(&mut c, &st, "hu").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(s["session_id"], se.as_str());
    assert_eq!(s["progress"]["done"], 1);
    assert_eq!(export_rows(&mut c, &st).await.len(), 2);
}
