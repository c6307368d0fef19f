mod common;

use std::sync::Arc;
use std::time::Duration;

use axum::http::StatusCode;
use common::{completion, StubServer};
use serde_json::json;
use whatif_cli::provider::HttpProvider;
use whatif_core::agent::{
    ChatMessage, ChatProvider, ProviderError, ProviderRequest, ProviderSettings, RequestTag,
};

fn settings(endpoint: &str, timeout: u64) -> ProviderSettings {
    ProviderSettings {
        endpoint: endpoint.into(),
        model: "test-model".into(),
        call_timeout_secs: timeout,
        retries: 0,
    }
}

fn request(system: &str) -> ProviderRequest {
    ProviderRequest {
        system: system.into(),
        messages: vec![
            ChatMessage::user("hello"),
            ChatMessage::assistant("hi"),
            ChatMessage::user("again"),
        ],
        temperature: 0.5,
        max_tokens: 64,
        tag: RequestTag {
            session: "s".into(),
            step: "patch.0".into(),
        },
    }
}

#[test]
fn sends_openai_shaped_requests() {
    let stub = StubServer::start(
        Arc::new(|_| (StatusCode::OK, completion("pong"))),
        Duration::ZERO,
    );
    let p = HttpProvider::new(settings(&stub.endpoint, 5), "sk-test");
    let r = p.complete(&request("be terse")).unwrap();
    assert_eq!(r.text, "pong");
    assert_eq!((r.usage.prompt_tokens, r.usage.completion_tokens), (10, 5));

    let seen = stub.requests();
    assert_eq!(seen[0].authorization.as_deref(), Some("Bearer sk-test"));
    let body = &seen[0].body;
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.5);
    assert_eq!(body["max_tokens"], 64);
    let roles: Vec<&str> = body["messages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["role"].as_str().unwrap())
        .collect();
    assert_eq!(roles, ["system", "user", "assistant", "user"]);
    assert_eq!(body["messages"][0]["content"], "be terse");
}

#[test]
fn empty_system_prompt_is_omitted() {
    let stub = StubServer::start(
        Arc::new(|_| (StatusCode::OK, completion("ok"))),
        Duration::ZERO,
    );
    HttpProvider::new(settings(&stub.endpoint, 5), "k")
        .complete(&request(""))
        .unwrap();
    assert_eq!(stub.requests()[0].body["messages"][0]["role"], "user");
}

#[test]
fn http_errors_carry_status_and_body() {
    let stub = StubServer::start(
        Arc::new(|_| (StatusCode::TOO_MANY_REQUESTS, json!({"error": "slow down"}))),
        Duration::ZERO,
    );
    let err = HttpProvider::new(settings(&stub.endpoint, 5), "k")
        .complete(&request(""))
        .unwrap_err();
    match &err {
        ProviderError::Status { status, body } => {
            assert_eq!(*status, 429);
            assert!(body.contains("slow down"));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.is_transient());
}

#[test]
fn missing_content_is_a_decode_error() {
    let stub = StubServer::start(
        Arc::new(|_| (StatusCode::OK, json!({"choices": []}))),
        Duration::ZERO,
    );
    let err = HttpProvider::new(settings(&stub.endpoint, 5), "k")
        .complete(&request(""))
        .unwrap_err();
    assert!(matches!(err, ProviderError::Decode(_)), "{err:?}");
}

#[test]
fn slow_servers_time_out() {
    let stub = StubServer::start(
        Arc::new(|_| (StatusCode::OK, completion("late"))),
        Duration::from_secs(3),
    );
    let err = HttpProvider::new(settings(&stub.endpoint, 1), "k")
        .complete(&request(""))
        .unwrap_err();
    assert_eq!(err, ProviderError::Timeout);
}

#[test]
fn unreachable_endpoints_are_transport_errors() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let err = HttpProvider::new(
        settings(&format!("http://127.0.0.1:{port}/v1/chat/completions"), 2),
        "k",
    )
    .complete(&request(""))
    .unwrap_err();
    assert!(matches!(err, ProviderError::Transport(_)), "{err:?}");
}
