use std::path::PathBuf;
use std::process::Command;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use quasicross_cli::service::app;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

async fn call(
    method: Method,
    uri: &str,
    body: impl Into<Body>,
) -> (StatusCode, Option<String>, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(body.into())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, ctype, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn post_json(uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let (status, _, text) = call(Method::POST, uri, body).await;
    (
        status,
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")),
    )
}

#[tokio::test]
async fn health_reports_version() {
    let (status, _, text) = call(Method::GET, "/api/health", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["version"], quasicross_cli::VERSION);
}

#[tokio::test]
async fn analyze_convex_k6() {
    let (status, v) = post_json("/api/analyze", read("convex_k6.json")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["triple_count"], 1);
    assert_eq!(v["validation"]["is_valid"], true);
}

#[tokio::test]
async fn analyze_invalid_drawing_is_a_report_not_an_error() {
    let (status, v) = post_json("/api/analyze", read("invalid_double_crossing.json")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["validation"]["is_valid"], false);
    assert_eq!(v["validation"]["violations"][0]["kind"], "MultipleMeetings");
}

#[tokio::test]
async fn malformed_payloads_are_client_errors() {
    for body in [
        "",
        "{",
        r#"{"format_version": 2, "vertices": [], "edges": []}"#,
        r#"{"format_version": 1, "vertices": [{"id": "a", "x": "1/0", "y": "0"}], "edges": []}"#,
    ] {
        let (status, v) = post_json("/api/analyze", body).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["error"], "parse");
        assert!(!v["message"].as_str().unwrap().is_empty());
    }
    let (status, _) = post_json("/api/bounds", r#"{"n": 11}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = post_json("/api/bounds", r#"{"n": 11, "e": 55, "x": 1}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, v) = post_json("/api/bounds", r#"{"n": 3, "e": 3}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "bounds");
}

#[tokio::test]
async fn bounds_for_k11() {
    let (status, v) = post_json("/api/bounds", r#"{"n": 11, "e": 55}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["best_integer_lower_bound"], "4");
    assert_eq!(v["eq1"], "7/2");
}

#[tokio::test]
async fn svg_endpoint() {
    let (status, ctype, text) = call(Method::POST, "/api/svg", read("convex_k6.json")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype.as_deref(), Some("image/svg+xml"));
    assert_eq!(text.matches("class=\"triple\"").count(), 1);
    let (_, _, again) = call(Method::POST, "/api/svg", read("convex_k6.json")).await;
    assert_eq!(text, again);
    let (status, _, _) = call(Method::POST, "/api/svg", read("invalid_concurrent.json")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_route_is_404() {
    let (status, _, _) = call(Method::GET, "/api/nothing", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cors_preflight_is_allowed() {
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/api/analyze")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert!(resp
        .headers()
        .contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}

#[tokio::test]
async fn concurrent_requests_are_independent() {
    let k6 = read("convex_k6.json");
    let bad = read("invalid_edge_through_vertex.json");
    let tasks: Vec<_> = (0..16)
        .map(|i| {
            let body = if i % 2 == 0 { k6.clone() } else { bad.clone() };
            tokio::spawn(async move { post_json("/api/analyze", body).await.1 })
        })
        .collect();
    for (i, t) in tasks.into_iter().enumerate() {
        let v = t.await.unwrap();
        assert_eq!(v["validation"]["is_valid"], i % 2 == 0);
    }
}

#[tokio::test]
async fn cli_count_and_analyze_agree_on_every_fixture() {
    let mut names: Vec<String> = std::fs::read_dir(fixtures())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let out = Command::new(env!("CARGO_BIN_EXE_quasicross"))
            .arg("count")
            .arg(fixtures().join(&name))
            .output()
            .unwrap();
        let cli: Value = serde_json::from_slice(&out.stdout).unwrap();
        let (status, api) = post_json("/api/analyze", read(&name)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(cli, api, "{name}");
    }
}
