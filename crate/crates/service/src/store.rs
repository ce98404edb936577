use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;

use crate::error::ServiceError;
use crate::session::Session;

pub type SessionHandle = Arc<Mutex<Session>>;

/// Sessions kept in memory and, when a directory is configured, mirrored to
/// one JSON snapshot per id. Each session sits behind its own lock.
pub struct SessionStore {
    dir: Option<PathBuf>,
    live: RwLock<HashMap<Uuid, SessionHandle>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            dir: None,
            live: RwLock::new(HashMap::new()),
        }
    }

    pub async fn on_disk(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        tokio::fs::create_dir_all(&dir).await?;
        Ok(SessionStore {
            dir: Some(dir),
            live: RwLock::new(HashMap::new()),
        })
    }

    fn path(dir: &Path, id: Uuid) -> PathBuf {
        dir.join(format!("{id}.json"))
    }

    pub async fn insert(&self, session: Session) -> Result<Uuid, ServiceError> {
        let id = session.id;
        self.persist(&session).await?;
        self.live.write().await.insert(id, Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Looks the session up in memory, then on disk.
    pub async fn get(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        let uuid = Uuid::parse_str(id).map_err(|_| ServiceError::NotFound(id.to_string()))?;
        if let Some(h) = self.live.read().await.get(&uuid) {
            return Ok(h.clone());
        }
        let Some(dir) = &self.dir else {
            return Err(ServiceError::NotFound(id.to_string()));
        };
        let text = match tokio::fs::read_to_string(Self::path(dir, uuid)).await {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ServiceError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let session = Session::from_snapshot(&text)?;
        let mut live = self.live.write().await;
        Ok(live.entry(uuid).or_insert_with(|| Arc::new(Mutex::new(session))).clone())
    }

    /// Writes the snapshot through a temporary file so a crash never leaves
    /// a half-written session.
    pub async fn persist(&self, session: &Session) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = Self::path(dir, session.id);
        let tmp = path.with_extension("json.tmp");
        tokio::fs::write(&tmp, session.to_snapshot()?).await?;
        tokio::fs::rename(&tmp, &path).await?;
        Ok(())
    }
}
