use hiercluster::hierarchy::JsonNode;
use hiercluster::insertion::{InsertionMode, InsertionRun, PendingQuery};
use hiercluster::noisy::RobustConfig;
use hiercluster::oracles::QueryLog;
use hiercluster::{ElementId, HierarchyError, TripletAnswer};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::ServiceError;

/// Snapshot format version written to disk.
pub const SNAPSHOT_VERSION: u32 = 1;

pub const DEFAULT_P: f64 = 0.9;
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SessionMode {
    Noiseless,
    /// `p` is the operator's estimate of how often answers are right.
    Noisy { p: f64, delta: f64 },
}

/// Body of `POST /sessions`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub elements: Vec<String>,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

fn default_mode() -> String {
    "noiseless".into()
}

impl CreateRequest {
    pub fn mode(&self) -> Result<SessionMode, ServiceError> {
        match self.mode.as_str() {
            "noiseless" => {
                if self.p.is_some() || self.delta.is_some() {
                    return Err(ServiceError::BadRequest("p and delta only apply to noisy mode".into()));
                }
                Ok(SessionMode::Noiseless)
            }
            "noisy" => Ok(SessionMode::Noisy {
                p: self.p.unwrap_or(DEFAULT_P),
                delta: self.delta.unwrap_or(DEFAULT_DELTA),
            }),
            other => Err(ServiceError::BadRequest(format!("unknown mode `{other}`"))),
        }
    }
}

/// One answered question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub seq: u64,
    pub triplet: [ElementId; 3],
    pub pair: [ElementId; 2],
}

/// Public view of the session state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionState {
    AwaitingAnswer { triplet: [ElementId; 3], seq: u64 },
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeView {
    pub newick: String,
    pub json: JsonNode,
    pub queries: u64,
    pub placed: usize,
    pub total: usize,
    pub per_insertion: Vec<u64>,
}

/// A suspended insertion run plus its transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: Uuid,
    pub mode: SessionMode,
    run: InsertionRun,
    log: QueryLog,
    transcript: Vec<AnswerRecord>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    session: Session,
}

impl Session {
    pub fn create(id: Uuid, elements: &[String], mode: SessionMode) -> Result<Session, ServiceError> {
        let elements = elements
            .iter()
            .map(ElementId::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let insertion = match mode {
            SessionMode::Noiseless => InsertionMode::Exact,
            SessionMode::Noisy { p, delta } => InsertionMode::Robust(
                RobustConfig::new(p, delta).map_err(|e| ServiceError::BadRequest(e.to_string()))?,
            ),
        };
        let run = InsertionRun::new(elements, insertion).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        Ok(Session {
            id,
            mode,
            run,
            log: QueryLog::default(),
            transcript: Vec::new(),
        })
    }

    pub fn pending(&self) -> Option<PendingQuery> {
        self.run.pending_query()
    }

    pub fn state(&self) -> SessionState {
        match self.pending() {
            Some(q) => SessionState::AwaitingAnswer {
                triplet: q.triplet.members().clone(),
                seq: q.seq,
            },
            None => SessionState::Done,
        }
    }

    pub fn is_done(&self) -> bool {
        self.run.is_done()
    }

    /// Applies one answer. `seq`, when given, must name the pending
    /// question, so a replayed answer is rejected.
    pub fn answer(&mut self, pair: &[String; 2], seq: Option<u64>) -> Result<SessionState, ServiceError> {
        let q = self.pending().ok_or(ServiceError::NoPendingQuery)?;
        if let Some(s) = seq {
            if s != q.seq {
                return Err(ServiceError::StaleAnswer { expected: q.seq, got: s });
            }
        }
        let a = ElementId::new(&pair[0]).map_err(|e| ServiceError::InvalidAnswer(e.to_string()))?;
        let b = ElementId::new(&pair[1]).map_err(|e| ServiceError::InvalidAnswer(e.to_string()))?;
        let answer: TripletAnswer = q
            .triplet
            .answer(&a, &b)
            .map_err(|e| ServiceError::InvalidAnswer(e.to_string()))?;
        let phase = self.run.inserting().map(|x| x.to_string()).unwrap_or_default();
        self.run.submit(&answer).map_err(|e| match e {
            HierarchyError::Inconsistent => ServiceError::InvalidAnswer(e.to_string()),
            other => ServiceError::Internal(other.to_string()),
        })?;
        self.log.record(&phase, 1);
        self.transcript.push(AnswerRecord {
            seq: q.seq,
            triplet: q.triplet.members().clone(),
            pair: answer.pair().clone(),
        });
        Ok(self.state())
    }

    pub fn tree(&self) -> Result<TreeView, ServiceError> {
        let t = self.run.tree();
        Ok(TreeView {
            newick: t.to_newick().map_err(|e| ServiceError::Internal(e.to_string()))?,
            json: t.to_json_tree(),
            queries: self.run.queries(),
            placed: t.leaf_count(),
            total: self.run.elements().len(),
            per_insertion: self.run.per_insertion_queries().to_vec(),
        })
    }

    /// Questions per inserted element.
    pub fn log(&self) -> &QueryLog {
        &self.log
    }

    pub fn transcript(&self) -> &[AnswerRecord] {
        &self.transcript
    }

    pub fn to_snapshot(&self) -> Result<String, ServiceError> {
        serde_json::to_string(&Snapshot {
            version: SNAPSHOT_VERSION,
            session: self.clone(),
        })
        .map_err(|e| ServiceError::Internal(e.to_string()))
    }

    pub fn from_snapshot(text: &str) -> Result<Session, ServiceError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| ServiceError::Corrupt(e.to_string()))?;
        match raw.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SNAPSHOT_VERSION) => {}
            other => return Err(ServiceError::Corrupt(format!("unsupported snapshot version {other:?}"))),
        }
        let snap: Snapshot = serde_json::from_value(raw).map_err(|e| ServiceError::Corrupt(e.to_string()))?;
        Ok(snap.session)
    }
}
