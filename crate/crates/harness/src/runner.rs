//! Administers a paper to a subject, persisting every step.

use std::sync::Mutex;
use std::time::Duration;

use aiq_core::{QuestionBank, Session, SessionError, SessionEvent, TestPaper};

use crate::clock::Clock;
use crate::store::{SessionLog, SessionStore, StoreError};
use crate::subjects::SubjectHandle;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("question {0} is not in the bank")]
    MissingQuestion(String),
    #[error("session belongs to subject {session}, not {subject}")]
    SubjectMismatch { session: String, subject: String },
}

struct LiveState {
    session: Session,
    log: SessionLog,
}

/// A session together with its open log. Every mutation goes through
/// [`LiveSession::commit`], which applies the events and writes them while
/// holding the session's lock.
pub struct LiveSession {
    state: Mutex<LiveState>,
}

impl LiveSession {
    pub fn new(session: Session, log: SessionLog) -> Self {
        LiveSession {
            state: Mutex::new(LiveState { session, log }),
        }
    }

    /// Starts a new session and its log in `store`.
    pub fn start(
        store: &SessionStore,
        session_id: &str,
        subject_id: &str,
        cohort: &str,
        paper: &TestPaper,
        bank: &QuestionBank,
        at_ms: u64,
    ) -> Result<Self, RunError> {
        let (session, started) =
            Session::start(session_id, subject_id, cohort, paper, bank, at_ms)?;
        let log = store.create(&started)?;
        Ok(LiveSession::new(session, log))
    }

    pub fn snapshot(&self) -> Session {
        self.lock().session.clone()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, LiveState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Runs `f` on a copy of the session, persists the events it returns
    /// and only then makes the copy current.
    pub fn commit<F>(&self, f: F) -> Result<Vec<SessionEvent>, RunError>
    where
        F: FnOnce(&mut Session) -> Result<Vec<SessionEvent>, SessionError>,
    {
        let mut state = self.lock();
        let mut next = state.session.clone();
        let events = f(&mut next)?;
        state.log.append(&events)?;
        state.session = next;
        Ok(events)
    }
}

/// Asks every remaining paper question in order and records the outcomes.
/// A question left in flight by an interrupted run is asked again.
pub fn run_session(
    live: &LiveSession,
    subject: &SubjectHandle,
    bank: &QuestionBank,
    timeout: Duration,
    clock: &dyn Clock,
) -> Result<Session, RunError> {
    let subject_id = &subject.descriptor().subject_id;
    let snapshot = live.snapshot();
    if &snapshot.subject_id != subject_id {
        return Err(RunError::SubjectMismatch {
            session: snapshot.subject_id,
            subject: subject_id.clone(),
        });
    }
    loop {
        let mut snapshot = live.snapshot();
        if snapshot.in_flight().is_none() {
            if snapshot.next_entry().is_none() {
                return Ok(snapshot);
            }
            live.commit(|s| Ok(vec![s.dispatch(clock.now_ms())?]))?;
            snapshot = live.snapshot();
        }
        let question_id = snapshot
            .in_flight()
            .map(|(id, _)| id.to_string())
            .unwrap_or_default();
        let question = bank
            .get(&question_id)
            .ok_or_else(|| RunError::MissingQuestion(question_id.clone()))?;
        let outcome = subject.ask(question, timeout, clock);
        log::debug!(
            "{} {}: {:?}",
            snapshot.session_id,
            question_id,
            outcome.status()
        );
        live.commit(|s| s.record_outcome(question, outcome, clock.now_ms()))?;
    }
}
