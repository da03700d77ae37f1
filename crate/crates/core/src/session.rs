//! One subject's administered test, kept as an event-sourced state machine.
//!
//! Commands ([`Session::dispatch`], [`Session::record_outcome`],
//! [`Session::submit_manual_grade`]) validate their input, then return the
//! [`SessionEvent`]s they applied. Persisting those events and feeding them
//! back through [`Session::replay`] rebuilds the same session.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::answer::{contains_answer, contains_numeric_answer};
use crate::bank::{Grading, Question, QuestionBank, TestPaper};
use crate::scale::IntelligenceScale;
use crate::subject::{FeedbackItem, OutcomeStatus, ResponseOutcome};
use crate::POINTS_PER_CORRECT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    Pending,
    Correct,
    Incorrect,
}

impl From<Verdict> for Grade {
    fn from(v: Verdict) -> Grade {
        match v {
            Verdict::Correct => Grade::Correct,
            Verdict::Incorrect => Grade::Incorrect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeSource {
    Auto,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    AwaitingGrades,
    Complete,
}

/// A paper question together with what grading it needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperEntry {
    pub question_id: String,
    pub subtest_id: String,
    pub grading: Grading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub question_id: String,
    pub subtest_id: String,
    pub grading: Grading,
    pub dispatched_at_ms: u64,
    pub outcome: ResponseOutcome,
    pub evaluated_item: Option<FeedbackItem>,
    pub grade: Grade,
    pub grade_source: Option<GradeSource>,
    pub grader_id: Option<String>,
    /// Set when the outcome was a transport error; the zero is not a
    /// genuine protocol result and the question may deserve a re-run.
    pub flagged: bool,
}

impl QuestionRecord {
    pub fn points(&self) -> u32 {
        if self.grade == Grade::Correct {
            POINTS_PER_CORRECT
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum SessionEvent {
    Started {
        session_id: String,
        subject_id: String,
        paper_id: String,
        scale_id: String,
        cohort: String,
        entries: Vec<PaperEntry>,
        at_ms: u64,
    },
    Dispatched {
        question_id: String,
        at_ms: u64,
    },
    Outcome {
        question_id: String,
        outcome: ResponseOutcome,
    },
    Graded {
        question_id: String,
        verdict: Verdict,
        source: GradeSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grader_id: Option<String>,
    },
    Completed {
        at_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("question {0} is not part of the paper")]
    UnknownQuestion(String),
    #[error("no record for question {0}")]
    UnknownRecord(String),
    #[error("question {0} already graded")]
    AlreadyGraded(String),
    #[error("question {0} is auto-graded")]
    AutoGraded(String),
    #[error("question {expected} is next, got {found}")]
    OutOfOrder { expected: String, found: String },
    #[error("every paper question has already been dispatched")]
    NothingToDispatch,
    #[error("question {0} was not dispatched")]
    NotDispatched(String),
    #[error("question {0} is already in flight")]
    InFlight(String),
    #[error("session is incomplete")]
    Incomplete,
    #[error("session was scored on scale {session}, not {requested}")]
    ScaleMismatch { session: String, requested: String },
    #[error("event log must start with a started event")]
    MissingStart,
    #[error("unexpected event: {0}")]
    UnexpectedEvent(&'static str),
}

/// Grades a reply by the first-item rule. Returns `None` for a delivered
/// reply to a manually graded question.
pub fn auto_grade(outcome: &ResponseOutcome, question: &Question) -> Option<Verdict> {
    if outcome.status() != OutcomeStatus::Delivered {
        return Some(Verdict::Incorrect);
    }
    let matcher: fn(&str, &str) -> bool = match question.grading {
        Grading::Manual => return None,
        Grading::AutoContains => contains_answer,
        Grading::AutoNumeric => contains_numeric_answer,
    };
    let correct = outcome
        .first_item()
        .and_then(FeedbackItem::as_text)
        .is_some_and(|text| question.accepted_answers.iter().any(|a| matcher(text, a)));
    Some(if correct {
        Verdict::Correct
    } else {
        Verdict::Incorrect
    })
}

/// Per-sub-test scores `F_i`, in scale order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtestScoreVector {
    pub scale_id: String,
    pub scores: Vec<(String, u32)>,
}

impl SubtestScoreVector {
    pub fn get(&self, subtest_id: &str) -> Option<u32> {
        self.scores
            .iter()
            .find(|(id, _)| id == subtest_id)
            .map(|&(_, s)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub subject_id: String,
    pub paper_id: String,
    pub scale_id: String,
    pub cohort: String,
    pub entries: Vec<PaperEntry>,
    pub started_at_ms: u64,
    pub finished_at_ms: Option<u64>,
    pub records: Vec<QuestionRecord>,
    pub status: SessionStatus,
    in_flight: Option<(String, u64)>,
}

impl Session {
    /// Opens a session for `paper`. Every paper entry must exist in `bank`.
    pub fn start(
        session_id: impl Into<String>,
        subject_id: impl Into<String>,
        cohort: impl Into<String>,
        paper: &TestPaper,
        bank: &QuestionBank,
        at_ms: u64,
    ) -> Result<(Session, SessionEvent), SessionError> {
        let entries = paper
            .entries
            .iter()
            .map(|id| {
                bank.get(id)
                    .map(|q| PaperEntry {
                        question_id: q.id.clone(),
                        subtest_id: q.subtest_id.clone(),
                        grading: q.grading,
                    })
                    .ok_or_else(|| SessionError::UnknownQuestion(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let event = SessionEvent::Started {
            session_id: session_id.into(),
            subject_id: subject_id.into(),
            paper_id: paper.paper_id.clone(),
            scale_id: paper.scale_id.clone(),
            cohort: cohort.into(),
            entries,
            at_ms,
        };
        let session = Session::from_started(&event)?;
        Ok((session, event))
    }

    fn from_started(event: &SessionEvent) -> Result<Session, SessionError> {
        let SessionEvent::Started {
            session_id,
            subject_id,
            paper_id,
            scale_id,
            cohort,
            entries,
            at_ms,
        } = event
        else {
            return Err(SessionError::MissingStart);
        };
        let mut session = Session {
            session_id: session_id.clone(),
            subject_id: subject_id.clone(),
            paper_id: paper_id.clone(),
            scale_id: scale_id.clone(),
            cohort: cohort.clone(),
            entries: entries.clone(),
            started_at_ms: *at_ms,
            finished_at_ms: None,
            records: Vec::new(),
            status: SessionStatus::Running,
            in_flight: None,
        };
        session.refresh_status();
        Ok(session)
    }

    /// Rebuilds a session from its event log.
    pub fn replay<'a>(
        events: impl IntoIterator<Item = &'a SessionEvent>,
    ) -> Result<Session, SessionError> {
        let mut events = events.into_iter();
        let mut session = Session::from_started(events.next().ok_or(SessionError::MissingStart)?)?;
        for event in events {
            session.apply(event)?;
        }
        Ok(session)
    }

    /// The next paper entry to be dispatched, if any.
    pub fn next_entry(&self) -> Option<&PaperEntry> {
        if self.in_flight.is_some() {
            return None;
        }
        self.entries.get(self.records.len())
    }

    /// The dispatched question still waiting for its outcome.
    pub fn in_flight(&self) -> Option<(&str, u64)> {
        self.in_flight.as_ref().map(|(id, at)| (id.as_str(), *at))
    }

    pub fn record(&self, question_id: &str) -> Option<&QuestionRecord> {
        self.records.iter().find(|r| r.question_id == question_id)
    }

    pub fn pending(&self) -> impl Iterator<Item = &QuestionRecord> {
        self.records.iter().filter(|r| r.grade == Grade::Pending)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &QuestionRecord> {
        self.records.iter().filter(|r| r.flagged)
    }

    pub fn dispatch(&mut self, at_ms: u64) -> Result<SessionEvent, SessionError> {
        if let Some((id, _)) = &self.in_flight {
            return Err(SessionError::InFlight(id.clone()));
        }
        let entry = self.next_entry().ok_or(SessionError::NothingToDispatch)?;
        let event = SessionEvent::Dispatched {
            question_id: entry.question_id.clone(),
            at_ms,
        };
        self.apply(&event)?;
        Ok(event)
    }

    /// Records the outcome of the in-flight question and grades it when no
    /// human judgment is needed.
    pub fn record_outcome(
        &mut self,
        question: &Question,
        outcome: ResponseOutcome,
        at_ms: u64,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        let verdict = auto_grade(&outcome, question);
        let mut events = Vec::with_capacity(3);
        events.push(SessionEvent::Outcome {
            question_id: question.id.clone(),
            outcome,
        });
        if let Some(verdict) = verdict {
            events.push(SessionEvent::Graded {
                question_id: question.id.clone(),
                verdict,
                source: GradeSource::Auto,
                grader_id: None,
            });
        }
        self.apply_all(events, at_ms)
    }

    /// Records a human verdict on a pending manually graded question.
    /// Regrading an already graded manual question needs `allow_regrade`.
    pub fn submit_manual_grade(
        &mut self,
        question_id: &str,
        verdict: Verdict,
        grader_id: impl Into<String>,
        allow_regrade: bool,
        at_ms: u64,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        let record = self
            .record(question_id)
            .ok_or_else(|| SessionError::UnknownRecord(question_id.to_string()))?;
        if record.grading.is_auto() || record.grade_source == Some(GradeSource::Auto) {
            return Err(SessionError::AutoGraded(question_id.to_string()));
        }
        if record.grade != Grade::Pending && !allow_regrade {
            return Err(SessionError::AlreadyGraded(question_id.to_string()));
        }
        let was_complete = self.status == SessionStatus::Complete;
        let event = SessionEvent::Graded {
            question_id: question_id.to_string(),
            verdict,
            source: GradeSource::Manual,
            grader_id: Some(grader_id.into()),
        };
        if was_complete {
            self.apply(&event)?;
            return Ok(alloc::vec![event]);
        }
        self.apply_all(alloc::vec![event], at_ms)
    }

    fn apply_all(
        &mut self,
        mut events: Vec<SessionEvent>,
        at_ms: u64,
    ) -> Result<Vec<SessionEvent>, SessionError> {
        // Validate on a copy so a rejected command leaves no partial state.
        let mut next = self.clone();
        for e in &events {
            next.apply(e)?;
        }
        if next.status == SessionStatus::Complete && next.finished_at_ms.is_none() {
            let done = SessionEvent::Completed { at_ms };
            next.apply(&done)?;
            events.push(done);
        }
        *self = next;
        Ok(events)
    }

    /// Applies one event, checking that it is consistent with the state.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        match event {
            SessionEvent::Started { .. } => {
                return Err(SessionError::UnexpectedEvent("second start"))
            }
            SessionEvent::Dispatched { question_id, at_ms } => {
                if let Some((id, _)) = &self.in_flight {
                    return Err(SessionError::InFlight(id.clone()));
                }
                let expected = self
                    .entries
                    .get(self.records.len())
                    .ok_or(SessionError::NothingToDispatch)?;
                if &expected.question_id != question_id {
                    return Err(SessionError::OutOfOrder {
                        expected: expected.question_id.clone(),
                        found: question_id.clone(),
                    });
                }
                self.in_flight = Some((question_id.clone(), *at_ms));
            }
            SessionEvent::Outcome {
                question_id,
                outcome,
            } => {
                let (id, at) = self
                    .in_flight
                    .clone()
                    .ok_or_else(|| SessionError::NotDispatched(question_id.clone()))?;
                if &id != question_id {
                    return Err(SessionError::NotDispatched(question_id.clone()));
                }
                let entry = &self.entries[self.records.len()];
                self.records.push(QuestionRecord {
                    question_id: id,
                    subtest_id: entry.subtest_id.clone(),
                    grading: entry.grading,
                    dispatched_at_ms: at,
                    evaluated_item: outcome.first_item().cloned(),
                    flagged: outcome.status() == OutcomeStatus::TransportError,
                    outcome: outcome.clone(),
                    grade: Grade::Pending,
                    grade_source: None,
                    grader_id: None,
                });
                self.in_flight = None;
            }
            SessionEvent::Graded {
                question_id,
                verdict,
                source,
                grader_id,
            } => {
                let record = self
                    .records
                    .iter_mut()
                    .find(|r| &r.question_id == question_id)
                    .ok_or_else(|| SessionError::UnknownRecord(question_id.clone()))?;
                match source {
                    GradeSource::Auto if record.grade != Grade::Pending => {
                        return Err(SessionError::AlreadyGraded(question_id.clone()))
                    }
                    GradeSource::Manual
                        if record.grading.is_auto()
                            || record.grade_source == Some(GradeSource::Auto) =>
                    {
                        return Err(SessionError::AutoGraded(question_id.clone()))
                    }
                    _ => {}
                }
                record.grade = (*verdict).into();
                record.grade_source = Some(*source);
                record.grader_id = grader_id.clone();
            }
            SessionEvent::Completed { at_ms } => {
                if self.status != SessionStatus::Complete {
                    return Err(SessionError::Incomplete);
                }
                self.finished_at_ms = Some(*at_ms);
            }
        }
        self.refresh_status();
        Ok(())
    }

    fn refresh_status(&mut self) {
        self.status = if self.records.len() < self.entries.len() {
            SessionStatus::Running
        } else if self.records.iter().any(|r| r.grade == Grade::Pending) {
            SessionStatus::AwaitingGrades
        } else {
            SessionStatus::Complete
        };
    }

    /// `F_i = 25 × correct answers` for every sub-test of `scale`.
    pub fn subtest_scores(
        &self,
        scale: &IntelligenceScale,
    ) -> Result<SubtestScoreVector, SessionError> {
        if self.scale_id != scale.id {
            return Err(SessionError::ScaleMismatch {
                session: self.scale_id.clone(),
                requested: scale.id.clone(),
            });
        }
        if self.status != SessionStatus::Complete {
            return Err(SessionError::Incomplete);
        }
        let scores = scale
            .subtests
            .iter()
            .map(|s| {
                let points = self
                    .records
                    .iter()
                    .filter(|r| r.subtest_id == s.id)
                    .map(QuestionRecord::points)
                    .sum();
                (s.id.clone(), points)
            })
            .collect();
        Ok(SubtestScoreVector {
            scale_id: scale.id.clone(),
            scores,
        })
    }
}
