use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

use super::{
    export_instances, transition, Action, AnnotationError, AnnotationTask, EventRecord, TaskInstance, TaskStatus,
    Verdict,
};
use crate::negative::EntailmentInstance;

/// Claims lapse after 30 minutes.
pub const DEFAULT_CLAIM_TIMEOUT_MS: i64 = 30 * 60 * 1000;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    }
}

/// Settable clock for tests and simulations.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(start_ms: i64) -> Self {
        ManualClock(AtomicI64::new(start_ms))
    }

    pub fn advance(&self, ms: i64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }
}

impl<C: Clock + ?Sized> Clock for Arc<C> {
    fn now_ms(&self) -> i64 {
        (**self).now_ms()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CreateOutcome {
    pub created: Vec<AnnotationTask>,
    pub skipped: usize,
}

/// Task state plus its event log, optionally persisted as line-delimited JSON.
pub struct AnnotationStore {
    tasks: BTreeMap<String, AnnotationTask>,
    events: Vec<EventRecord>,
    log: Option<(PathBuf, File)>,
    claim_timeout_ms: i64,
    clock: Box<dyn Clock>,
}

impl std::fmt::Debug for AnnotationStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnnotationStore")
            .field("tasks", &self.tasks.len())
            .field("events", &self.events.len())
            .field("log", &self.log.as_ref().map(|(p, _)| p))
            .finish()
    }
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> AnnotationError {
    AnnotationError::Store(format!("{}: {e}", path.display()))
}

impl AnnotationStore {
    pub fn in_memory(claim_timeout_ms: i64, clock: impl Clock + 'static) -> Self {
        AnnotationStore {
            tasks: BTreeMap::new(),
            events: Vec::new(),
            log: None,
            claim_timeout_ms,
            clock: Box::new(clock),
        }
    }

    /// Open (or create) a log file and rebuild state by replay. A torn final
    /// line left by a crash mid-append is dropped and truncated away.
    pub fn open(path: &Path, claim_timeout_ms: i64, clock: impl Clock + 'static) -> Result<Self, AnnotationError> {
        let (events, good_len, total_len) = read_log(path)?;
        let tasks = replay(&events, claim_timeout_ms).map_err(|e| store_err(path, e))?;

        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| store_err(path, e))?;
        if good_len < total_len {
            file.set_len(good_len as u64).map_err(|e| store_err(path, e))?;
        }
        Ok(AnnotationStore {
            tasks,
            events,
            log: Some((path.to_owned(), file)),
            claim_timeout_ms,
            clock: Box::new(clock),
        })
    }

    pub fn claim_timeout_ms(&self) -> i64 {
        self.claim_timeout_ms
    }

    pub fn now(&self) -> i64 {
        let now = self.clock.now_ms();
        // Keep timestamps monotone so replay sees the same expiry decisions.
        self.events.last().map_or(now, |e| now.max(e.timestamp))
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Stored state, without expiry applied.
    pub fn raw_tasks(&self) -> &BTreeMap<String, AnnotationTask> {
        &self.tasks
    }

    pub fn get(&self, task_id: &str) -> Result<AnnotationTask, AnnotationError> {
        let now = self.now();
        self.tasks
            .get(task_id)
            .map(|t| t.view_at(now, self.claim_timeout_ms))
            .ok_or_else(|| AnnotationError::NotFound(task_id.to_owned()))
    }

    pub fn list(&self, status: Option<TaskStatus>) -> Vec<AnnotationTask> {
        let now = self.now();
        self.tasks
            .values()
            .map(|t| t.view_at(now, self.claim_timeout_ms))
            .filter(|t| status.is_none_or(|s| t.status == s))
            .collect()
    }

    fn commit(&mut self, actor: &str, action: Action, task_id: &str, payload: serde_json::Value) -> Result<AnnotationTask, AnnotationError> {
        let event = EventRecord {
            seq: self.events.last().map_or(1, |e| e.seq + 1),
            timestamp: self.now(),
            actor: actor.to_owned(),
            action,
            task_id: task_id.to_owned(),
            payload,
        };
        let next = transition(self.tasks.get(task_id), &event, self.claim_timeout_ms)?;
        if let Some((path, file)) = &mut self.log {
            let mut line = serde_json::to_string(&event).expect("serializable event");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.sync_data())
                .map_err(|e| store_err(path, e))?;
        }
        self.events.push(event);
        self.tasks.insert(task_id.to_owned(), next.clone());
        Ok(next)
    }

    /// One pending task per instance, keyed by the instance's source id.
    /// Instances whose id already has a task are skipped.
    pub fn create_tasks(&mut self, instances: Vec<TaskInstance>, actor: &str) -> Result<CreateOutcome, AnnotationError> {
        let mut outcome = CreateOutcome::default();
        for inst in instances {
            let task_id = inst.source_id.clone();
            if self.tasks.contains_key(&task_id) {
                outcome.skipped += 1;
                continue;
            }
            let payload = serde_json::to_value(&inst).expect("serializable instance");
            outcome.created.push(self.commit(actor, Action::Create, &task_id, payload)?);
        }
        Ok(outcome)
    }

    pub fn claim(&mut self, task_id: &str, annotator_id: &str) -> Result<AnnotationTask, AnnotationError> {
        self.commit(annotator_id, Action::Claim, task_id, serde_json::Value::Null)
    }

    pub fn submit_edit(
        &mut self,
        task_id: &str,
        annotator_id: &str,
        start: usize,
        end: usize,
        replacement: &str,
    ) -> Result<AnnotationTask, AnnotationError> {
        let payload = json!({"start": start, "end": end, "replacement": replacement});
        self.commit(annotator_id, Action::SubmitEdit, task_id, payload)
    }

    pub fn verify(&mut self, task_id: &str, verifier_id: &str, verdict: Verdict) -> Result<AnnotationTask, AnnotationError> {
        let action = match verdict {
            Verdict::Accept => Action::Verify,
            Verdict::Reject => Action::Reject,
        };
        self.commit(verifier_id, action, task_id, serde_json::Value::Null)
    }

    pub fn export(&self, pair_positives: bool) -> Vec<EntailmentInstance> {
        export_instances(self.tasks.values(), pair_positives)
    }
}

/// Events of a log file without touching it. A torn final line is ignored.
pub fn load_events(path: &Path) -> Result<Vec<EventRecord>, AnnotationError> {
    read_log(path).map(|(events, _, _)| events)
}

/// Parsed events, byte length of the intact prefix, and total byte length.
fn read_log(path: &Path) -> Result<(Vec<EventRecord>, usize, usize), AnnotationError> {
    let mut text = String::new();
    if path.exists() {
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| store_err(path, e))?;
    }
    let mut events = Vec::new();
    let mut good_len = 0;
    let mut offset = 0;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (idx, line) in lines.iter().enumerate() {
        offset += line.len();
        if line.trim().is_empty() {
            good_len = offset;
            continue;
        }
        match serde_json::from_str::<EventRecord>(line) {
            Ok(ev) => {
                events.push(ev);
                good_len = offset;
            }
            Err(_) if idx + 1 == lines.len() && !line.ends_with('\n') => break,
            Err(e) => return Err(store_err(path, format!("line {}: {e}", idx + 1))),
        }
    }
    Ok((events, good_len, text.len()))
}

/// Fold an event sequence into task state.
pub fn replay(events: &[EventRecord], claim_timeout_ms: i64) -> Result<BTreeMap<String, AnnotationTask>, AnnotationError> {
    let mut tasks = BTreeMap::new();
    for ev in events {
        let next = transition(tasks.get(&ev.task_id), ev, claim_timeout_ms)
            .map_err(|e| AnnotationError::Store(format!("event {}: {e}", ev.seq)))?;
        tasks.insert(ev.task_id.clone(), next);
    }
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: &str) -> TaskInstance {
        TaskInstance {
            source_id: id.into(),
            image_id: format!("img-{id}"),
            image_uri: format!("https://img/{id}.jpg"),
            caption: "Supporters marched peacefully during the protest".into(),
            context: "context".into(),
        }
    }

    fn store() -> (AnnotationStore, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::new(1_000));
        (AnnotationStore::in_memory(DEFAULT_CLAIM_TIMEOUT_MS, clock.clone()), clock)
    }

    #[test]
    fn create_skips_duplicates() {
        let (mut s, _) = store();
        let out = s.create_tasks((0..5).map(|i| inst(&format!("t{i}"))).collect(), "admin").unwrap();
        assert_eq!(out.created.len(), 5);
        assert!(out.created.iter().all(|t| t.status == TaskStatus::Pending));
        let out = s.create_tasks(vec![inst("x"), inst("x")], "admin").unwrap();
        assert_eq!((out.created.len(), out.skipped), (1, 1));
        assert_eq!(s.create_tasks(vec![], "admin").unwrap(), CreateOutcome::default());
    }

    #[test]
    fn claim_conflicts() {
        let (mut s, _) = store();
        s.create_tasks(vec![inst("t")], "admin").unwrap();
        assert_eq!(s.claim("t", "ann").unwrap().status, TaskStatus::Claimed);
        assert!(matches!(s.claim("t", "bob"), Err(AnnotationError::Conflict(_))));
        assert!(matches!(s.claim("nope", "bob"), Err(AnnotationError::NotFound(_))));
        s.submit_edit("t", "ann", 19, 29, "violently").unwrap();
        assert!(matches!(s.claim("t", "bob"), Err(AnnotationError::Conflict(_))));
    }

    #[test]
    fn claims_expire() {
        let (mut s, clock) = store();
        s.create_tasks(vec![inst("t")], "admin").unwrap();
        s.claim("t", "ann").unwrap();
        clock.advance(DEFAULT_CLAIM_TIMEOUT_MS);
        assert_eq!(s.get("t").unwrap().status, TaskStatus::Pending);
        assert!(matches!(
            s.submit_edit("t", "ann", 19, 29, "violently"),
            Err(AnnotationError::Conflict(_))
        ));
        assert_eq!(s.claim("t", "bob").unwrap().claimant.as_deref(), Some("bob"));
    }

    #[test]
    fn verification_rules() {
        let (mut s, _) = store();
        s.create_tasks(vec![inst("t")], "admin").unwrap();
        s.claim("t", "ann").unwrap();
        let t = s.submit_edit("t", "ann", 19, 29, "violently").unwrap();
        assert_eq!(t.status, TaskStatus::Edited);
        assert!(matches!(s.verify("t", "ann", Verdict::Accept), Err(AnnotationError::Policy(_))));

        let t = s.verify("t", "bob", Verdict::Reject).unwrap();
        assert_eq!(t.status, TaskStatus::Pending);
        assert!(t.edit.is_none());

        s.claim("t", "ann").unwrap();
        s.submit_edit("t", "ann", 19, 29, "violently").unwrap();
        let t = s.verify("t", "bob", Verdict::Accept).unwrap();
        assert_eq!(t.status, TaskStatus::PeerVerified);
        assert_eq!(t.verifier.as_deref(), Some("bob"));
    }

    #[test]
    fn export_counts_and_pairs() {
        let (mut s, _) = store();
        s.create_tasks((0..5).map(|i| inst(&format!("t{i}"))).collect(), "admin").unwrap();
        for id in ["t0", "t2", "t4"] {
            s.claim(id, "ann").unwrap();
            s.submit_edit(id, "ann", 19, 29, "violently").unwrap();
            s.verify(id, "bob", Verdict::Accept).unwrap();
        }
        let out = s.export(false);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|i| i.caption == "Supporters marched violently during the protest"));
        assert_eq!(out, s.export(false));
        let paired = s.export(true);
        assert_eq!(paired.len(), 6);
        assert_eq!(paired.iter().filter(|i| i.label == crate::negative::Label::Entails).count(), 3);
    }

    #[test]
    fn persisted_log_replays() {
        let dir = std::env::temp_dir().join(format!("capforge-store-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("events.jsonl");
        let _ = std::fs::remove_file(&path);
        {
            let mut s = AnnotationStore::open(&path, DEFAULT_CLAIM_TIMEOUT_MS, ManualClock::new(5)).unwrap();
            s.create_tasks(vec![inst("t")], "admin").unwrap();
            s.claim("t", "ann").unwrap();
            s.submit_edit("t", "ann", 19, 29, "violently").unwrap();
        }
        // Simulate a torn append.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"seq\":4,\"times").unwrap();
        drop(f);

        let mut s = AnnotationStore::open(&path, DEFAULT_CLAIM_TIMEOUT_MS, ManualClock::new(10)).unwrap();
        assert_eq!(s.events().len(), 3);
        assert_eq!(s.get("t").unwrap().status, TaskStatus::Edited);
        s.verify("t", "bob", Verdict::Accept).unwrap();
        let s = AnnotationStore::open(&path, DEFAULT_CLAIM_TIMEOUT_MS, ManualClock::new(10)).unwrap();
        assert_eq!(s.get("t").unwrap().status, TaskStatus::PeerVerified);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
