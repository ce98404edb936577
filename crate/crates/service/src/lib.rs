//! HTTP session API for insertion clustering with a person as the oracle.
//!
//! Each session holds a suspended [`InsertionRun`](hiercluster::insertion::InsertionRun);
//! the service hands out its pending triplet and feeds the reply back.
//!
//! | route | result |
//! |---|---|
//! | `POST /sessions` `{elements, mode, p?, delta?}` | `{id}` |
//! | `GET /sessions/{id}/query` | `{triplet, seq}` or `{done: true}` |
//! | `POST /sessions/{id}/answer` `{pair, seq?}` | `{state}` |
//! | `GET /sessions/{id}/tree` | `{newick, json, queries, ...}` |
//!
//! Unknown sessions give 404, answers without a pending question or with a
//! stale `seq` give 409, and pairs outside the triplet give 422.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::router;
pub use error::ServiceError;
pub use session::{Session, SessionMode, SessionState};
pub use store::SessionStore;

/// Serves until Ctrl-C. Sessions persist under `data_dir` when given.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> Result<(), ServiceError> {
    let store = match data_dir {
        Some(d) => SessionStore::on_disk(d).await?,
        None => SessionStore::in_memory(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// Serves on an already bound listener until the task is dropped.
pub async fn serve_listener(listener: tokio::net::TcpListener, store: SessionStore) -> Result<(), ServiceError> {
    axum::serve(listener, router(Arc::new(store))).await?;
    Ok(())
}
