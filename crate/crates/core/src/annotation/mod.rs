//! Manual negative-caption annotation: annotators claim a task, replace one
//! span of its caption, and a different annotator accepts or rejects the edit.
//!
//! State is an event-sourced fold: every mutation is an [`EventRecord`] run
//! through [`transition`], and replaying the log reproduces the state exactly.

mod api;
mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use api::{AnnotationService, ApiRequest, ApiResponse, TaskSummary};
pub use store::{load_events, replay, AnnotationStore, Clock, CreateOutcome, ManualClock, SystemClock, DEFAULT_CLAIM_TIMEOUT_MS};

use crate::corpus::{CaptionRecord, ImageRef};
use crate::negative::{EntailmentInstance, Label, NegClass};
use crate::text::{char_len, char_slice, fold_surface, nfc, replace_char_span};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("task {0:?} not found")]
    NotFound(String),
    #[error("task {0:?} already exists")]
    Duplicate(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("invalid edit: {0}")]
    Validation(String),
    #[error("policy violation: {0}")]
    Policy(String),
    #[error("store error: {0}")]
    Store(String),
}

impl AnnotationError {
    pub fn kind(&self) -> &'static str {
        match self {
            AnnotationError::NotFound(_) => "not_found",
            AnnotationError::Duplicate(_) => "duplicate",
            AnnotationError::Conflict(_) => "conflict",
            AnnotationError::Validation(_) => "validation",
            AnnotationError::Policy(_) => "policy",
            AnnotationError::Store(_) => "store",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Pending,
    Claimed,
    Edited,
    PeerVerified,
    Rejected,
}

impl FromStr for TaskStatus {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pending" => Ok(TaskStatus::Pending),
            "claimed" => Ok(TaskStatus::Claimed),
            "edited" => Ok(TaskStatus::Edited),
            "peer_verified" | "peerverified" => Ok(TaskStatus::PeerVerified),
            "rejected" => Ok(TaskStatus::Rejected),
            _ => Err(AnnotationError::Validation(format!("unknown status {s:?}"))),
        }
    }
}

/// What the annotator sees. The caption is stored NFC-normalized; span
/// offsets count chars of that string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub source_id: String,
    #[serde(default)]
    pub image_id: String,
    pub image_uri: String,
    pub caption: String,
    pub context: String,
}

impl TaskInstance {
    pub fn from_record(record: &CaptionRecord, context: &str) -> Self {
        TaskInstance {
            source_id: record.record_id.clone(),
            image_id: record.image.image_id.clone(),
            image_uri: record.image.uri.clone(),
            caption: record.caption.clone(),
            context: context.to_owned(),
        }
    }

    pub fn from_instance(instance: &EntailmentInstance) -> Self {
        TaskInstance {
            source_id: instance.source_record_id.clone(),
            image_id: instance.image.image_id.clone(),
            image_uri: instance.image.uri.clone(),
            caption: instance.caption.clone(),
            context: instance.context.clone(),
        }
    }

    fn normalized(mut self) -> Self {
        self.caption = nfc(&self.caption);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanEdit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
    pub resulting_caption: String,
    pub author: String,
}

impl SpanEdit {
    /// Validate a single-span replacement against `caption`.
    pub fn new(caption: &str, start: usize, end: usize, replacement: &str, author: &str) -> Result<Self, AnnotationError> {
        if start >= end {
            return Err(AnnotationError::Validation(format!("span ({start},{end}) is empty or inverted")));
        }
        let original = char_slice(caption, start, end).ok_or_else(|| {
            AnnotationError::Validation(format!(
                "span ({start},{end}) exceeds caption length {}",
                char_len(caption)
            ))
        })?;
        let replacement = nfc(replacement);
        if replacement.trim().is_empty() {
            return Err(AnnotationError::Validation("replacement is empty".into()));
        }
        if fold_surface(original) == fold_surface(&replacement) {
            return Err(AnnotationError::Validation(format!(
                "replacement {replacement:?} does not change {original:?}"
            )));
        }
        let resulting_caption = replace_char_span(caption, start, end, &replacement).expect("validated span");
        Ok(SpanEdit {
            start,
            end,
            replacement,
            resulting_caption,
            author: author.to_owned(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub instance: TaskInstance,
    pub status: TaskStatus,
    pub claimant: Option<String>,
    pub claimed_at: Option<i64>,
    pub edit: Option<SpanEdit>,
    pub verifier: Option<String>,
    #[serde(default)]
    pub rejections: u32,
}

impl AnnotationTask {
    fn claim_expired(&self, now: i64, timeout_ms: i64) -> bool {
        self.status == TaskStatus::Claimed && self.claimed_at.is_some_and(|t| now.saturating_sub(t) >= timeout_ms)
    }

    /// Status as seen at `now`: an expired claim reads as `Pending`.
    pub fn effective_status(&self, now: i64, timeout_ms: i64) -> TaskStatus {
        if self.claim_expired(now, timeout_ms) {
            TaskStatus::Pending
        } else {
            self.status
        }
    }

    /// Copy with any expired claim released.
    pub fn view_at(&self, now: i64, timeout_ms: i64) -> AnnotationTask {
        let mut view = self.clone();
        if self.claim_expired(now, timeout_ms) {
            view.status = TaskStatus::Pending;
            view.claimant = None;
            view.claimed_at = None;
        }
        view
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

impl FromStr for Verdict {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accept" => Ok(Verdict::Accept),
            "reject" => Ok(Verdict::Reject),
            _ => Err(AnnotationError::Validation(format!("unknown verdict {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Create,
    Claim,
    SubmitEdit,
    Verify,
    Reject,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::Create => "create",
            Action::Claim => "claim",
            Action::SubmitEdit => "submit_edit",
            Action::Verify => "verify",
            Action::Reject => "reject",
        };
        f.write_str(s)
    }
}

/// One line of the append-only log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub actor: String,
    pub action: Action,
    pub task_id: String,
    #[serde(default)]
    pub payload: serde_json::Value,
}

#[derive(Deserialize)]
struct EditPayload {
    start: usize,
    end: usize,
    replacement: String,
}

/// Apply one event to the current state of its task. This is the only place
/// task state changes, both for live commands and for replay.
pub fn transition(
    current: Option<&AnnotationTask>,
    event: &EventRecord,
    claim_timeout_ms: i64,
) -> Result<AnnotationTask, AnnotationError> {
    let now = event.timestamp;
    if event.action == Action::Create {
        if current.is_some() {
            return Err(AnnotationError::Duplicate(event.task_id.clone()));
        }
        let instance: TaskInstance = serde_json::from_value(event.payload.clone())
            .map_err(|e| AnnotationError::Store(format!("bad create payload: {e}")))?;
        return Ok(AnnotationTask {
            task_id: event.task_id.clone(),
            instance: instance.normalized(),
            status: TaskStatus::Pending,
            claimant: None,
            claimed_at: None,
            edit: None,
            verifier: None,
            rejections: 0,
        });
    }

    let task = current.ok_or_else(|| AnnotationError::NotFound(event.task_id.clone()))?;
    let mut next = task.view_at(now, claim_timeout_ms);
    match event.action {
        Action::Create => unreachable!(),
        Action::Claim => {
            if next.status != TaskStatus::Pending {
                return Err(AnnotationError::Conflict(format!(
                    "task {:?} is {:?}{}",
                    task.task_id,
                    next.status,
                    next.claimant.as_deref().map(|c| format!(" by {c}")).unwrap_or_default()
                )));
            }
            next.status = TaskStatus::Claimed;
            next.claimant = Some(event.actor.clone());
            next.claimed_at = Some(now);
        }
        Action::SubmitEdit => {
            if next.status != TaskStatus::Claimed {
                return Err(AnnotationError::Conflict(format!(
                    "task {:?} is {:?}, not claimed",
                    task.task_id, next.status
                )));
            }
            if next.claimant.as_deref() != Some(event.actor.as_str()) {
                return Err(AnnotationError::Conflict(format!(
                    "task {:?} is claimed by another annotator",
                    task.task_id
                )));
            }
            let p: EditPayload = serde_json::from_value(event.payload.clone())
                .map_err(|e| AnnotationError::Validation(format!("bad edit payload: {e}")))?;
            let edit = SpanEdit::new(&next.instance.caption, p.start, p.end, &p.replacement, &event.actor)?;
            next.edit = Some(edit);
            next.status = TaskStatus::Edited;
        }
        Action::Verify | Action::Reject => {
            if next.status != TaskStatus::Edited {
                return Err(AnnotationError::Conflict(format!(
                    "task {:?} is {:?}, not awaiting verification",
                    task.task_id, next.status
                )));
            }
            let author = next.edit.as_ref().map(|e| e.author.as_str());
            if author == Some(event.actor.as_str()) {
                return Err(AnnotationError::Policy(format!(
                    "{} cannot verify their own edit",
                    event.actor
                )));
            }
            if event.action == Action::Verify {
                next.status = TaskStatus::PeerVerified;
                next.verifier = Some(event.actor.clone());
            } else {
                // Rejected edits go straight back to the open pool.
                next.status = TaskStatus::Pending;
                next.edit = None;
                next.claimant = None;
                next.claimed_at = None;
                next.rejections += 1;
            }
        }
    }
    Ok(next)
}

/// Entailment instances for every peer-verified task, ordered by task id.
/// With `pair_positives`, each negative is preceded by its original caption.
pub fn export_instances<'a, I>(tasks: I, pair_positives: bool) -> Vec<EntailmentInstance>
where
    I: IntoIterator<Item = &'a AnnotationTask>,
{
    let mut verified: Vec<&AnnotationTask> = tasks
        .into_iter()
        .filter(|t| t.status == TaskStatus::PeerVerified)
        .collect();
    verified.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let mut out = Vec::new();
    for task in verified {
        let edit = task.edit.as_ref().expect("verified tasks carry an edit");
        let inst = &task.instance;
        let base = EntailmentInstance {
            instance_id: format!("{}/p", task.task_id),
            image: ImageRef {
                image_id: inst.image_id.clone(),
                uri: inst.image_uri.clone(),
                content_hash: None,
            },
            caption: inst.caption.clone(),
            context: inst.context.clone(),
            label: Label::Entails,
            neg_class: NegClass::Manual,
            source_record_id: inst.source_id.clone(),
            donor_record_id: None,
        };
        if pair_positives {
            out.push(base.clone());
        }
        out.push(EntailmentInstance {
            instance_id: format!("{}/manual", task.task_id),
            caption: edit.resulting_caption.clone(),
            label: Label::NotEntails,
            ..base
        });
    }
    out
}
