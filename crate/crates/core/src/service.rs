//! Read-only HTTP/JSON API over one loaded dataset snapshot.
//!
//! | endpoint              | body                                  |
//! |-----------------------|---------------------------------------|
//! | `GET /v1/categories`  | `{"categories": [...]}`               |
//! | `GET /v1/series`      | [`SeriesReport`]                      |
//! | `GET /v1/decomposition` | [`DecompositionReport`]             |
//! | `GET /v1/correlation` | [`CorrelationReport`]                 |
//! | `GET /v1/sax`         | [`SaxReport`]                         |
//! | `GET /v1/manifest`    | the dataset [`Manifest`]              |
//!
//! Analysis endpoints take the [`AnalysisRequest`] fields as query
//! parameters. Errors are `{"error": kind, "detail": message}` with 400 for
//! malformed parameters, 404 for an unknown category and 422 when the data
//! cannot support the analysis.
//!
//! [`SeriesReport`]: crate::analysis::SeriesReport
//! [`DecompositionReport`]: crate::analysis::DecompositionReport
//! [`CorrelationReport`]: crate::analysis::CorrelationReport
//! [`SaxReport`]: crate::analysis::SaxReport
//! [`Manifest`]: crate::dataset::Manifest

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{RawQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use tower_http::services::ServeDir;

use crate::analysis::{AnalysisError, AnalysisRequest, Defaults};
use crate::category::Category;
use crate::dataset::{Dataset, Manifest};

struct AppState {
    dataset: Dataset,
    defaults: Defaults,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub detail: String,
}

pub struct ApiError(AnalysisError);

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        ApiError(e)
    }
}

pub fn status_for(e: &AnalysisError) -> StatusCode {
    match e {
        AnalysisError::UnknownCategory(_) => StatusCode::NOT_FOUND,
        AnalysisError::BadRequest(_) => StatusCode::BAD_REQUEST,
        AnalysisError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.0.kind(), detail: self.0.to_string() };
        (status_for(&self.0), Json(body)).into_response()
    }
}

#[derive(Serialize)]
struct Categories<'a> {
    categories: &'a [Category],
}

fn parse_query(raw: Option<String>, defaults: &Defaults) -> Result<AnalysisRequest, AnalysisError> {
    let pairs: Vec<(String, String)> = serde_urlencoded::from_str(raw.as_deref().unwrap_or(""))
        .map_err(|e| AnalysisError::BadRequest(format!("malformed query: {e}")))?;
    AnalysisRequest::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())), defaults)
}

macro_rules! analysis_handler {
    ($name:ident, $method:ident) => {
        async fn $name(State(state): State<Arc<AppState>>, RawQuery(query): RawQuery) -> Result<Response, ApiError> {
            let req = parse_query(query, &state.defaults)?;
            let report = state.dataset.$method(&req)?;
            Ok(Json(report).into_response())
        }
    };
}

analysis_handler!(series, series);
analysis_handler!(decomposition, decomposition);
analysis_handler!(correlation, correlation);
analysis_handler!(sax, sax);

async fn categories(State(state): State<Arc<AppState>>) -> Response {
    Json(Categories { categories: state.dataset.categories() }).into_response()
}

async fn manifest(State(state): State<Arc<AppState>>) -> Json<Manifest> {
    Json(state.dataset.manifest.clone())
}

async fn not_found() -> Response {
    let body = ErrorBody { error: "not_found", detail: "no such endpoint".into() };
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

/// The API router. With `static_dir`, other paths serve files from it
/// (the exploration UI's built assets).
pub fn router(dataset: Dataset, defaults: Defaults, static_dir: Option<PathBuf>) -> Router {
    let state = Arc::new(AppState { dataset, defaults });
    let api = Router::new()
        .route("/categories", get(categories))
        .route("/series", get(series))
        .route("/decomposition", get(decomposition))
        .route("/correlation", get(correlation))
        .route("/sax", get(sax))
        .route("/manifest", get(manifest))
        .fallback(not_found)
        .with_state(state);
    let app = Router::new().nest("/v1", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, router: Router) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
