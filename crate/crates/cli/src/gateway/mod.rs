//! HTTP/JSON gateway over the engine.
//!
//! Every endpoint except `/api/health` and `/api/auth/login` needs an
//! `Authorization: Bearer <token>` header. Errors come back as
//! [`ApiError`] bodies.

mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{FromRequest, FromRequestParts, Path, Query};
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use axum::routing::{get, post};
use axum::{Json, Router};
use railshop_core::{DenyReason, Engine, Error};
use tower_http::services::ServeDir;

pub use error::{status_for, ApiError};

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    /// Where `baseline=<name>` files for pipeline reports are looked up.
    pub baseline_dir: Option<PathBuf>,
}

/// JSON body whose rejection is an [`ApiError`].
#[derive(FromRequest)]
#[from_request(via(Json), rejection(ApiError))]
pub struct Body<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(Query), rejection(ApiError))]
pub struct Q<T>(pub T);

#[derive(FromRequestParts)]
#[from_request(via(Path), rejection(ApiError))]
pub struct Id<T>(pub T);

/// The bearer token of the request.
pub struct Bearer(pub String);

#[axum::async_trait]
impl<S: Send + Sync> FromRequestParts<S> for Bearer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, ApiError> {
        parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(|t| Bearer(t.trim().to_owned()))
            .ok_or_else(|| Error::Unauthenticated(DenyReason::UnknownSession).into())
    }
}

impl AppState {
    /// Runs `f` on the blocking pool; engine calls may wait on the journal.
    pub async fn run<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&Engine) -> railshop_core::Result<T> + Send + 'static,
    {
        let engine = Arc::clone(&self.engine);
        tokio::task::spawn_blocking(move || f(&engine))
            .await
            .map_err(|e| {
                tracing::error!(error = %e, "engine task failed");
                ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", "internal error")
            })?
            .map_err(ApiError::from)
    }
}

pub fn router(state: AppState, console_dir: Option<PathBuf>) -> Router {
    use routes::*;
    let api = Router::new()
        .route("/health", get(health))
        .route("/auth/login", post(login))
        .route("/auth/logout", post(logout))
        .route("/me", get(me))
        .route("/users", get(list_users).post(create_user))
        .route("/users/:id/active", post(set_user_active))
        .route("/zones", get(get_zones).put(put_zones))
        .route("/zones/:id/conflicts", get(zone_conflicts))
        .route("/machines", get(list_machines).post(register_machine))
        .route("/machines/:id", get(get_machine))
        .route("/machines/:id/status", post(set_machine_status))
        .route("/machines/:id/faults", post(report_fault))
        .route("/machines/:id/maintenance", get(maintenance_history).post(record_maintenance))
        .route("/machines/:id/work", post(start_work))
        .route("/contractors", get(list_contractors).post(register_contractor))
        .route("/contractors/available_count", get(available_count))
        .route("/contractors/:id", get(get_contractor))
        .route("/contractors/:id/approval", post(set_approval))
        .route("/contractors/:id/eligibility", get(eligibility))
        .route("/permits", get(list_permits).post(create_permit))
        .route("/permits/:id", get(get_permit))
        .route("/permits/:id/transitions", post(transition))
        .route("/permits/:id/history", get(permit_history))
        .route("/incidents", get(list_incidents).post(report_incident))
        .route("/incidents/:id", get(get_incident))
        .route("/incidents/:id/advance", post(advance_incident))
        .route("/audit", get(audit_log))
        .route("/audit/verify", get(audit_verify))
        .route("/reports/pipeline", get(pipeline_report))
        .route("/reports/incidents", get(incident_report))
        .fallback(not_found)
        .with_state(state);
    let mut app = Router::new().nest("/api", api);
    if let Some(dir) = console_dir {
        app = app.nest_service("/console", ServeDir::new(dir));
    }
    app.fallback(not_found)
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint")
}

/// Expires overdue permits every `every` until the task is dropped.
pub async fn sweep_loop(engine: Arc<Engine>, every: Duration) {
    let mut ticks = tokio::time::interval(every);
    ticks.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        ticks.tick().await;
        let engine = Arc::clone(&engine);
        match tokio::task::spawn_blocking(move || engine.expire_sweep()).await {
            Ok(Ok(ids)) if !ids.is_empty() => tracing::info!(count = ids.len(), "expired permits"),
            Ok(Ok(_)) => {}
            Ok(Err(e)) => tracing::error!(error = %e, "expire sweep failed"),
            Err(e) => tracing::error!(error = %e, "expire sweep task failed"),
        }
    }
}

/// Serves until ctrl-c.
pub async fn serve(
    state: AppState,
    addr: SocketAddr,
    console_dir: Option<PathBuf>,
    sweep_every: Duration,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let sweeper = tokio::spawn(sweep_loop(Arc::clone(&state.engine), sweep_every));
    let app = router(state, console_dir);
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
