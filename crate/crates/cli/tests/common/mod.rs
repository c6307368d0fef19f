#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use whatif_core::agent::MockProvider;
use whatif_core::bench::{parse_dataset, BUNDLED_DATASET, BUNDLED_SCRIPT};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap()
}

pub fn query_text(n: usize) -> String {
    parse_dataset(BUNDLED_DATASET).unwrap()[0].queries[n - 1]
        .text
        .clone()
}

#[derive(Debug, Clone)]
pub struct Seen {
    pub authorization: Option<String>,
    pub body: Value,
}

pub type Reply = Arc<dyn Fn(&Value) -> (StatusCode, Value) + Send + Sync>;

#[derive(Clone)]
struct Stub {
    seen: Arc<Mutex<Vec<Seen>>>,
    reply: Reply,
    delay: Duration,
}

async fn completions(
    State(stub): State<Stub>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    stub.seen.lock().unwrap().push(Seen {
        authorization: headers
            .get("authorization")
            .and_then(|v| v.to_str().ok())
            .map(String::from),
        body: body.clone(),
    });
    if !stub.delay.is_zero() {
        tokio::time::sleep(stub.delay).await;
    }
    let (status, value) = (stub.reply)(&body);
    (status, Json(value))
}

/// A chat-completions server on a loopback port.
pub struct StubServer {
    pub endpoint: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
}

impl StubServer {
    pub fn start(reply: Reply, delay: Duration) -> Self {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let stub = Stub {
            seen: seen.clone(),
            reply,
            delay,
        };
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                let app = Router::new()
                    .route("/v1/chat/completions", post(completions))
                    .with_state(stub);
                axum::serve(listener, app).await.unwrap();
            });
        });
        StubServer {
            endpoint: format!("http://{addr}/v1/chat/completions"),
            seen,
        }
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

pub fn completion(text: &str) -> Value {
    json!({
        "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 5}
    })
}

/// Answers like the bundled script, recovering the query from the prompt
/// text and the step from the prompt kind.
pub fn scripted_reply() -> Reply {
    let mock = MockProvider::from_json(BUNDLED_SCRIPT).unwrap();
    let dataset = parse_dataset(BUNDLED_DATASET).unwrap();
    let queries: Vec<(String, String)> = dataset[0]
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| (q.text.clone(), dataset[0].session_name(i)))
        .collect();
    Arc::new(move |body: &Value| {
        let text: String = body["messages"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["content"].as_str().unwrap_or_default())
            .collect::<Vec<_>>()
            .join("\n");
        let session = queries
            .iter()
            .filter(|(q, _)| text.contains(q.as_str()))
            .max_by_key(|(q, _)| q.len())
            .map_or("none".to_string(), |(_, s)| s.clone());
        let step = if text.contains("code safety evaluator") {
            "safeguard.0"
        } else if text.contains("skilled interpreter") {
            "interpret"
        } else if text.contains("evaluating explanations") {
            "judge"
        } else {
            "patch.0"
        };
        match mock.lookup(&session, step) {
            Some(answer) => (StatusCode::OK, completion(answer)),
            None => (StatusCode::NOT_FOUND, json!({"error": "no answer"})),
        }
    })
}
