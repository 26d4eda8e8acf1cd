//! Transport-agnostic request/response layer over [`AnnotationStore`].
//! Mutations are serialized through one write lock; reads share a read lock.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::{AnnotationError, AnnotationStore, AnnotationTask, TaskInstance, TaskStatus, Verdict};
use crate::negative::EntailmentInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ApiRequest {
    ListTasks {
        #[serde(default)]
        status: Option<TaskStatus>,
    },
    GetTask {
        task_id: String,
    },
    CreateTasks {
        instances: Vec<TaskInstance>,
        #[serde(default = "default_actor")]
        actor: String,
    },
    Claim {
        task_id: String,
        annotator_id: String,
    },
    SubmitEdit {
        task_id: String,
        annotator_id: String,
        span: (usize, usize),
        replacement: String,
    },
    Verify {
        task_id: String,
        verifier_id: String,
        verdict: Verdict,
    },
    Export {
        #[serde(default)]
        pair_positives: bool,
    },
}

fn default_actor() -> String {
    "system".into()
}

/// Short listing entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub status: TaskStatus,
    pub caption: String,
    pub claimant: Option<String>,
    pub edit_author: Option<String>,
}

impl From<&AnnotationTask> for TaskSummary {
    fn from(t: &AnnotationTask) -> Self {
        TaskSummary {
            task_id: t.task_id.clone(),
            status: t.status,
            caption: t.instance.caption.clone(),
            claimant: t.claimant.clone(),
            edit_author: t.edit.as_ref().map(|e| e.author.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ApiResponse {
    Tasks { tasks: Vec<TaskSummary> },
    Task { task: AnnotationTask },
    Created { created: usize, skipped: usize },
    Exported { instances: Vec<EntailmentInstance> },
}

#[derive(Debug)]
pub struct AnnotationService {
    store: RwLock<AnnotationStore>,
}

impl AnnotationService {
    pub fn new(store: AnnotationStore) -> Self {
        AnnotationService {
            store: RwLock::new(store),
        }
    }

    pub fn handle(&self, request: ApiRequest) -> Result<ApiResponse, AnnotationError> {
        match request {
            ApiRequest::ListTasks { status } => {
                let store = self.read();
                Ok(ApiResponse::Tasks {
                    tasks: store.list(status).iter().map(TaskSummary::from).collect(),
                })
            }
            ApiRequest::GetTask { task_id } => Ok(ApiResponse::Task {
                task: self.read().get(&task_id)?,
            }),
            ApiRequest::CreateTasks { instances, actor } => {
                let out = self.write().create_tasks(instances, &actor)?;
                Ok(ApiResponse::Created {
                    created: out.created.len(),
                    skipped: out.skipped,
                })
            }
            ApiRequest::Claim { task_id, annotator_id } => Ok(ApiResponse::Task {
                task: self.write().claim(&task_id, &annotator_id)?,
            }),
            ApiRequest::SubmitEdit {
                task_id,
                annotator_id,
                span,
                replacement,
            } => Ok(ApiResponse::Task {
                task: self.write().submit_edit(&task_id, &annotator_id, span.0, span.1, &replacement)?,
            }),
            ApiRequest::Verify {
                task_id,
                verifier_id,
                verdict,
            } => Ok(ApiResponse::Task {
                task: self.write().verify(&task_id, &verifier_id, verdict)?,
            }),
            ApiRequest::Export { pair_positives } => Ok(ApiResponse::Exported {
                instances: self.read().export(pair_positives),
            }),
        }
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, AnnotationStore> {
        self.store.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, AnnotationStore> {
        self.store.write().unwrap_or_else(|p| p.into_inner())
    }

    /// Run `f` against a read snapshot of the store.
    pub fn with_store<T>(&self, f: impl FnOnce(&AnnotationStore) -> T) -> T {
        f(&self.read())
    }
}
