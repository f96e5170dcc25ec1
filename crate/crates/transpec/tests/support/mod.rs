#![allow(dead_code)]

pub mod persistence;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use transpec::config::{Config, Mode};
use transpec::fixtures::FixtureStore;
use transpec::gateway::Gateway;
use transpec::pipeline::Pipeline;
use transpec::store::SessionStore;

pub const GOOD_KEY: &str = "test-key";

pub fn shipped_fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/paper")
}

pub fn shipped_input(name: &str) -> PathBuf {
    shipped_fixtures().join("inputs").join(name)
}

pub fn read_input(name: &str) -> String {
    std::fs::read_to_string(shipped_input(name)).unwrap()
}

/// Replay pipeline over the shipped fixtures with sessions in `sessions`.
pub fn replay_pipeline(sessions: &std::path::Path) -> Pipeline {
    let config = Config { sessions_dir: sessions.to_owned(), fixtures_dir: shipped_fixtures(), ..Config::default() };
    let gateway = Gateway::replay(FixtureStore::new(shipped_fixtures()));
    Pipeline::new(&config, gateway, Arc::new(SessionStore::open(sessions).unwrap()))
}

#[derive(Default)]
pub struct MockState {
    pub chat_calls: AtomicUsize,
    pub embed_calls: AtomicUsize,
    /// Number of leading requests answered with HTTP 500.
    pub fail_first: AtomicUsize,
}

/// Deterministic vector with awkward binary fractions, so that formatting
/// or parsing loss would show up as a byte difference.
pub fn mock_vector(text: &str) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
    }
    (0..16)
        .map(|i| {
            h = h.rotate_left(7).wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i);
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0 + 1e-17 * i as f64
        })
        .collect()
}

pub fn mock_reply(prompt: &str) -> String {
    let tail: String = prompt.chars().rev().take(8).collect::<Vec<_>>().into_iter().rev().collect();
    format!("1. First for {tail}\n2. Second for {tail}\n3. Third for {tail}")
}

fn authorized(headers: &HeaderMap) -> bool {
    headers.get("authorization").and_then(|v| v.to_str().ok()) == Some(&format!("Bearer {GOOD_KEY}"))
}

fn failing(state: &MockState) -> bool {
    state.fail_first.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1)).is_ok()
}

async fn chat(
    State(state): State<Arc<MockState>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    state.chat_calls.fetch_add(1, Ordering::SeqCst);
    if !authorized(&headers) {
        return (StatusCode::UNAUTHORIZED, Json(json!({"error": {"message": "bad key"}})));
    }
    if failing(&state) {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "try again"})));
    }
    let prompt = body["messages"][0]["content"].as_str().unwrap_or_default();
    (
        StatusCode::OK,
        Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": mock_reply(prompt)}}]})),
    )
}

async fn embeddings(
    State(state): State<Arc<MockState>>,
    headers: HeaderMap,
    Json(body): Json<Value>,
) -> (StatusCode, Json<Value>) {
    state.embed_calls.fetch_add(1, Ordering::SeqCst);
    if !authorized(&headers) {
        return (StatusCode::UNAUTHORIZED, Json(json!({"error": {"message": "bad key"}})));
    }
    if failing(&state) {
        return (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": "try again"})));
    }
    let input = body["input"].as_str().unwrap_or_default();
    (StatusCode::OK, Json(json!({"data": [{"index": 0, "embedding": mock_vector(input)}]})))
}

/// Starts an OpenAI-compatible mock on an ephemeral port.
pub async fn spawn_mock() -> (SocketAddr, Arc<MockState>) {
    let state = Arc::new(MockState::default());
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/embeddings", post(embeddings))
        .with_state(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (addr, state)
}

pub fn live_config(addr: SocketAddr, mode: Mode, key: &str, fixtures: &std::path::Path) -> Config {
    Config {
        mode,
        chat_base_url: format!("http://{addr}/v1"),
        embed_base_url: format!("http://{addr}/v1"),
        api_key: Some(key.to_owned()),
        fixtures_dir: fixtures.to_owned(),
        timeout_secs: 5,
        max_retries: 2,
        ..Config::default()
    }
}
