//! HTTP API over one project file, for the companion UI and scripts.
//!
//! Queries return the same JSON as the corresponding library call. Every
//! mutation goes through the workflow stages or a journaled refinement edit,
//! is saved before it is acknowledged, and bumps the revision returned in
//! the `x-revision` and `ETag` headers. A mutation sent with a stale
//! `If-Match` revision gets 409 and the current revision.

pub mod api;
pub mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::RwLock;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use workbench_core::StoreError;
use workbench_verify::VerifyPolicy;

pub use api::{parse_kinds, Shared, REVISION_HEADER};
pub use session::Session;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub project: PathBuf,
    pub policy: VerifyPolicy,
    /// Replay log used when extraction asks for the replay adapter.
    pub replay_log: Option<PathBuf>,
    /// Origins allowed by CORS; any origin when empty.
    pub cors_origins: Vec<String>,
}

pub fn open(config: &ServiceConfig) -> Result<Shared, StoreError> {
    let s = Session::open(&config.project, config.policy.clone(), config.replay_log.clone())?;
    Ok(Arc::new(RwLock::new(s)))
}

pub fn router(state: Shared, cors_origins: &[String]) -> Router {
    let origins = if cors_origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        AllowOrigin::list(cors_origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST, Method::PATCH])
        .allow_headers(Any)
        .expose_headers(Any);
    let api = Router::new()
        .route("/project", get(api::get_project))
        .route("/documents", post(api::post_documents))
        .route("/extract", post(api::post_extract))
        .route(
            "/requirements/{uid}",
            get(api::get_requirement).patch(api::patch_requirement),
        )
        .route("/synthesize", post(api::post_synthesize))
        .route("/dsm", get(api::get_dsm))
        .route("/edits", post(api::post_edits))
        .route("/impact", get(api::get_impact))
        .route("/verify", post(api::post_verify))
        .route("/reports/latest", get(api::get_latest_report))
        .route("/geometry/{uid}/aabb", get(api::get_aabb));
    Router::new().nest("/api", api).layer(cors).with_state(state)
}

#[derive(Debug)]
pub enum ServeError {
    Load(StoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for ServeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServeError::Load(e) => write!(f, "cannot load project: {e}"),
            ServeError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ServeError {}

/// Loads the project and serves until the process is stopped.
pub async fn serve(config: ServiceConfig, bind: SocketAddr) -> Result<(), ServeError> {
    let state = open(&config).map_err(ServeError::Load)?;
    let app = router(state, &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(bind).await.map_err(ServeError::Io)?;
    log::info!("serving {} on {}", config.project.display(), bind);
    axum::serve(listener, app).await.map_err(ServeError::Io)
}
