use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::error::ServiceError;
use crate::session::{CreateRequest, Session, SessionState, TreeView};
use crate::store::SessionStore;

type Shared = Arc<SessionStore>;

/// Body of `POST /sessions/{id}/answer`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub pair: [String; 2],
    /// Sequence number of the question being answered; optional.
    #[serde(default)]
    pub seq: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Created {
    pub id: Uuid,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Answered {
    pub state: SessionState,
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/tree", get(tree))
        .with_state(store)
}

async fn create(State(store): State<Shared>, Json(req): Json<CreateRequest>) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let session = Session::create(Uuid::new_v4(), &req.elements, req.mode()?)?;
    let id = store.insert(session).await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn query(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ServiceError> {
    let handle = store.get(&id).await?;
    let s = handle.lock().await;
    Ok(Json(match s.state() {
        SessionState::AwaitingAnswer { triplet, seq } => json!({ "triplet": triplet, "seq": seq }),
        SessionState::Done => json!({ "done": true }),
    }))
}

async fn answer(
    State(store): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<AnswerRequest>,
) -> Result<Json<Answered>, ServiceError> {
    let handle = store.get(&id).await?;
    let mut s = handle.lock().await;
    let mut next = s.clone();
    let state = next.answer(&req.pair, req.seq)?;
    store.persist(&next).await?;
    *s = next;
    Ok(Json(Answered { state }))
}

async fn tree(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<TreeView>, ServiceError> {
    let handle = store.get(&id).await?;
    let s = handle.lock().await;
    Ok(Json(s.tree()?))
}

async fn summary(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<Value>, ServiceError> {
    let handle = store.get(&id).await?;
    let s = handle.lock().await;
    Ok(Json(json!({
        "id": s.id,
        "mode": s.mode,
        "state": s.state(),
        "queries": s.tree()?.queries,
        "log": s.log(),
    })))
}
