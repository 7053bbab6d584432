use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use summation_core::experiments::parse_references;
use summation_core::preference::{Choice, QueryPair};
use summation_service::store::Store;
use summation_service::{router, AppState, CorpusStatus};
use tower::ServiceExt;

const CORPUS: &str = include_str!("../../../fixtures/toy/corpus.jsonl");
const REFERENCES: &str = include_str!("../../../fixtures/toy/references.txt");

struct Harness {
    state: Arc<AppState>,
    app: Router,
}

impl Harness {
    fn open(dir: &Path) -> Self {
        let state = Arc::new(AppState::load(Store::open(dir).unwrap(), 42).unwrap());
        Harness { app: router(state.clone()), state }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri);
        let req = match body {
            Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
        (status, value)
    }

    async fn corpus(&self) -> String {
        let (status, body) = self.call("POST", "/corpora", Some(json!({ "jsonl": CORPUS }))).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        let id = body["corpus_id"].as_str().unwrap().to_string();
        for _ in 0..600 {
            let (_, body) = self.call("GET", &format!("/corpora/{id}"), None).await;
            match body["status"].as_str().unwrap() {
                "ready" => return id,
                "failed" => panic!("corpus build failed: {body}"),
                _ => tokio::time::sleep(Duration::from_millis(50)).await,
            }
        }
        panic!("corpus build timed out");
    }

    async fn session(&self, corpus_id: &str, query_budget: usize, summary_budget: usize) -> String {
        let body = json!({
            "corpus_id": corpus_id, "query_budget": query_budget, "summary_budget": summary_budget,
            "feature_set_size": 10, "seed": 7,
        });
        let (status, body) = self.call("POST", "/sessions", Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    /// Answers every query with the reference oracle; returns the number served.
    async fn answer_all(&self, corpus_id: &str, session_id: &str) -> usize {
        let org = match self.state.corpora.read().unwrap().get(corpus_id).cloned() {
            Some(CorpusStatus::Ready(org)) => org,
            other => panic!("{other:?}"),
        };
        let oracle = org.oracle(&parse_references(REFERENCES));
        let mut served = 0;
        loop {
            let (status, q) = self.call("GET", &format!("/sessions/{session_id}/query"), None).await;
            assert_eq!(status, StatusCode::OK);
            if q["exhausted"] == json!(true) {
                return served;
            }
            served += 1;
            let pair: QueryPair = serde_json::from_value(q.clone()).unwrap();
            let choice = match oracle.respond(&pair) {
                Choice::Left => "left",
                Choice::Right => "right",
            };
            let (status, fb) =
                self.call("POST", &format!("/sessions/{session_id}/feedback"), Some(json!({ "choice": choice }))).await;
            assert_eq!(status, StatusCode::OK, "{fb}");
            assert_eq!(fb["budget_remaining"], q["budget_remaining"]);
        }
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn health_and_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    assert_eq!(h.call("GET", "/health", None).await, (StatusCode::OK, json!({ "status": "ok" })));
    assert_eq!(h.call("GET", "/corpora/nope", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("GET", "/corpora/nope/hierarchy", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("GET", "/sessions/nope", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("GET", "/sessions/nope/query", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("POST", "/sessions/nope/feedback", Some(json!({ "choice": "left" }))).await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("POST", "/sessions/nope/summary", None).await.0, StatusCode::NOT_FOUND);
    let body = json!({ "corpus_id": "nope", "query_budget": 5, "summary_budget": 3, "feature_set_size": 10 });
    assert_eq!(h.call("POST", "/sessions", Some(body)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn corpus_validation() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let bad = [json!({}), json!({ "jsonl": "not json" }), json!({ "jsonl": CORPUS, "path": "x" }), json!({ "path": "/no/such/file" })];
    for body in bad {
        let (status, resp) = h.call("POST", "/corpora", Some(body.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body} -> {resp}");
        assert!(resp["error"].is_string());
    }
    let path = dir.path().join("c.jsonl");
    std::fs::write(&path, CORPUS).unwrap();
    let (status, _) = h.call("POST", "/corpora", Some(json!({ "path": path }))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
}

#[tokio::test(flavor = "multi_thread")]
async fn hierarchy_export_after_build() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let id = h.corpus().await;
    let (status, tree) = h.call("GET", &format!("/corpora/{id}/hierarchy"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(tree["label"].is_string(), "{tree}");
    // a second upload with the same seed builds the same map
    let other = h.corpus().await;
    assert_eq!(h.call("GET", &format!("/corpora/{other}/hierarchy"), None).await.1, tree);
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_session_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let id = h.corpus().await;
    let cases = [
        json!({ "corpus_id": id, "query_budget": 5, "summary_budget": 3, "feature_set_size": 7 }),
        json!({ "corpus_id": id, "query_budget": 5, "summary_budget": 0, "feature_set_size": 10 }),
        json!({ "corpus_id": id, "query_budget": 5, "summary_budget": 201, "feature_set_size": 10 }),
        json!({ "corpus_id": id, "query_budget": 1001, "summary_budget": 3, "feature_set_size": 10 }),
        json!({ "corpus_id": id, "query_budget": -1, "summary_budget": 3, "feature_set_size": 10 }),
        json!({ "corpus_id": id, "query_budget": 5, "summary_budget": 3, "feature_set_size": 10, "round_size": 0 }),
        json!({ "corpus_id": id, "summary_budget": 3, "feature_set_size": 10 }),
    ];
    for body in cases {
        let (status, resp) = h.call("POST", "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body} -> {resp}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn feedback_protocol_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let c = h.corpus().await;
    let s = h.session(&c, 3, 3).await;
    let fb = format!("/sessions/{s}/feedback");

    // nothing pending yet
    assert_eq!(h.call("POST", &fb, Some(json!({ "choice": "left" }))).await.0, StatusCode::CONFLICT);
    let (_, q1) = h.call("GET", &format!("/sessions/{s}/query"), None).await;
    // asking again repeats the pending query
    assert_eq!(h.call("GET", &format!("/sessions/{s}/query"), None).await.1, q1);
    assert_eq!(h.call("POST", &fb, Some(json!({ "choice": "sideways" }))).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(h.call("POST", &fb, Some(json!({ "choice": "left" }))).await.0, StatusCode::OK);
    // double answer
    assert_eq!(h.call("POST", &fb, Some(json!({ "choice": "left" }))).await.0, StatusCode::CONFLICT);

    // summary before querying is over
    let (status, body) = h.call("POST", &format!("/sessions/{s}/summary"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");

    let (status, summary) = h.call("POST", &format!("/sessions/{s}/summary"), Some(json!({ "skip_remaining": true }))).await;
    assert_eq!(status, StatusCode::OK, "{summary}");
    assert!(summary["concepts"].as_array().unwrap().len() <= 3);
    assert_eq!(h.call("GET", &format!("/sessions/{s}/query"), None).await.1["exhausted"], json!(true));
    assert_eq!(h.call("POST", &fb, Some(json!({ "choice": "left" }))).await.0, StatusCode::CONFLICT);
    // the summary is stable once produced
    assert_eq!(h.call("POST", &format!("/sessions/{s}/summary"), None).await.1, summary);
    let (_, view) = h.call("GET", &format!("/sessions/{s}"), None).await;
    assert_eq!(view["state"], "DONE");
    assert_eq!(view["preferences"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread")]
async fn zero_query_budget_goes_straight_to_summary() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let c = h.corpus().await;
    let s = h.session(&c, 0, 4).await;
    assert_eq!(h.call("GET", &format!("/sessions/{s}"), None).await.1["state"], "TRAINED");
    assert_eq!(h.call("GET", &format!("/sessions/{s}/query"), None).await.1["exhausted"], json!(true));
    let (status, summary) = h.call("POST", &format!("/sessions/{s}/summary"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(summary["concepts"].as_array().unwrap().len() <= 4);
}

#[tokio::test(flavor = "multi_thread")]
async fn scripted_sessions_are_deterministic_and_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (c, runs) = {
        let h = Harness::open(dir.path());
        let c = h.corpus().await;
        let mut runs = Vec::new();
        for _ in 0..2 {
            let s = h.session(&c, 12, 4).await;
            let served = h.answer_all(&c, &s).await;
            assert!(served > 0 && served <= 12, "{served}");
            let (status, summary) = h.call("POST", &format!("/sessions/{s}/summary"), None).await;
            assert_eq!(status, StatusCode::OK, "{summary}");
            let (_, view) = h.call("GET", &format!("/sessions/{s}"), None).await;
            assert_eq!(view["queries_served"], json!(served));
            assert!(view["queries_served"].as_u64().unwrap() <= view["query_budget"].as_u64().unwrap());
            runs.push((s, summary, view));
        }
        let ((_, sa, va), (_, sb, vb)) = (&runs[0], &runs[1]);
        assert_eq!(sa, sb);
        assert_eq!(va["model"], vb["model"]);
        assert_eq!(va["preferences"], vb["preferences"]);
        (c, runs)
    };

    // a fresh process replays the logs into the same state
    let h = Harness::open(dir.path());
    assert_eq!(h.call("GET", &format!("/corpora/{c}"), None).await.1["status"], "ready");
    for (s, summary, view) in runs {
        assert_eq!(h.call("GET", &format!("/sessions/{s}"), None).await.1, view);
        assert_eq!(h.call("POST", &format!("/sessions/{s}/summary"), None).await.1, summary);
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn restart_mid_session_resumes_the_pending_query() {
    let dir = tempfile::tempdir().unwrap();
    let (s, q) = {
        let h = Harness::open(dir.path());
        let c = h.corpus().await;
        let s = h.session(&c, 6, 3).await;
        for _ in 0..2 {
            h.call("GET", &format!("/sessions/{s}/query"), None).await;
            assert_eq!(h.call("POST", &format!("/sessions/{s}/feedback"), Some(json!({ "choice": "right" }))).await.0, StatusCode::OK);
        }
        let (_, q) = h.call("GET", &format!("/sessions/{s}/query"), None).await;
        (s, q)
    };
    let h = Harness::open(dir.path());
    let (_, view) = h.call("GET", &format!("/sessions/{s}"), None).await;
    assert_eq!(view["preferences"].as_array().unwrap().len(), 2);
    assert_eq!(view["state"], "QUERYING");
    // the unanswered query was not logged, so it is served again
    assert_eq!(h.call("GET", &format!("/sessions/{s}/query"), None).await.1, q);
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let h = Harness::open(dir.path());
    let c = h.corpus().await;
    let a = h.session(&c, 5, 3).await;
    let b = h.session(&c, 5, 3).await;
    assert_ne!(a, b);
    h.call("GET", &format!("/sessions/{a}/query"), None).await;
    assert_eq!(h.call("POST", &format!("/sessions/{a}/feedback"), Some(json!({ "choice": "left" }))).await.0, StatusCode::OK);
    let (_, vb) = h.call("GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(vb["queries_served"], json!(0));
    assert!(vb["preferences"].as_array().unwrap().is_empty());
    // b has no pending query of its own
    assert_eq!(h.call("POST", &format!("/sessions/{b}/feedback"), Some(json!({ "choice": "left" }))).await.0, StatusCode::CONFLICT);
}
