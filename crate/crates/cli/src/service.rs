//! Stateless local HTTP service used by the editor. Every request carries
//! the whole drawing; responses use the same JSON documents as the CLI.

use axum::extract::DefaultBodyLimit;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use quasicross::analysis::{bound_report_doc, Analysis};
use quasicross::format::parse_drawing;
use quasicross::svg::{export_svg, Palette};

const BODY_LIMIT: usize = 64 << 20;

pub fn app() -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/analyze", post(analyze))
        .route("/api/bounds", post(bounds))
        .route("/api/svg", post(svg))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .layer(CorsLayer::permissive())
}

pub async fn serve(port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app()).await
}

fn error(status: StatusCode, kind: &str, message: impl ToString) -> Response {
    (
        status,
        Json(json!({"error": kind, "message": message.to_string()})),
    )
        .into_response()
}

/// Run CPU-bound work off the async workers; a panic becomes a 500.
async fn blocking<F: FnOnce() -> Response + Send + 'static>(f: F) -> Response {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r,
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e),
    }
}

async fn health() -> Response {
    Json(json!({"name": "quasicross", "version": crate::VERSION})).into_response()
}

async fn analyze(body: String) -> Response {
    blocking(move || match parse_drawing(&body) {
        Ok(d) => Json(Analysis::of(&d).to_result(&d)).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, "parse", e),
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsRequest {
    n: u64,
    e: u64,
}

async fn bounds(body: String) -> Response {
    let req: BoundsRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "parse", e),
    };
    blocking(move || match bound_report_doc(req.n, req.e) {
        Ok(doc) => Json(doc).into_response(),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, "bounds", e),
    })
    .await
}

async fn svg(body: String) -> Response {
    blocking(move || {
        let d = match parse_drawing(&body) {
            Ok(d) => d,
            Err(e) => return error(StatusCode::BAD_REQUEST, "parse", e),
        };
        let palette = match Palette::from_env() {
            Ok(p) => p,
            Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, "palette", e),
        };
        let analysis = Analysis::of(&d);
        match export_svg(&d, &analysis, &palette) {
            Ok(text) => ([(header::CONTENT_TYPE, "image/svg+xml")], text).into_response(),
            Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, "invalid_drawing", e),
        }
    })
    .await
}
