use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::Duration;

use aiq_core::{FeedbackItem, Modality, Question};
use serde::{Deserialize, Serialize};

use super::{Reply, Subject};
use crate::clock::Clock;

/// Question currently shown to the proctor, with its server-side deadline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProctorPrompt {
    pub question_id: String,
    pub prompt: String,
    pub prompt_modality: Modality,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<String>,
    pub published_at_ms: u64,
    pub deadline_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProctorAnswer {
    Text(String),
    Attachment {
        path: String,
        modality: Modality,
    },
    /// The subject cannot receive this question's modality.
    CannotBeAsked,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubmitError {
    #[error("no question is awaiting an answer")]
    NoQuestion,
    #[error("question {0} is not the current question")]
    WrongQuestion(String),
    #[error("question {0} already answered")]
    AlreadyAnswered(String),
    #[error("proctor channel closed")]
    Closed,
}

#[derive(Default)]
struct ProctorState {
    current: Option<ProctorPrompt>,
    answer: Option<ProctorAnswer>,
    closed: bool,
}

/// Rendezvous between a human session and whoever relays the questions
/// (the web console or a terminal).
#[derive(Clone)]
pub struct ProctorChannel {
    shared: Arc<(Mutex<ProctorState>, Condvar)>,
    clock: Arc<dyn Clock>,
}

impl ProctorChannel {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        ProctorChannel {
            shared: Arc::new((Mutex::new(ProctorState::default()), Condvar::new())),
            clock,
        }
    }

    fn state(&self) -> MutexGuard<'_, ProctorState> {
        self.shared.0.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn current(&self) -> Option<ProctorPrompt> {
        self.state().current.clone()
    }

    pub fn is_closed(&self) -> bool {
        self.state().closed
    }

    pub fn submit(&self, question_id: &str, answer: ProctorAnswer) -> Result<(), SubmitError> {
        let mut state = self.state();
        if state.closed {
            return Err(SubmitError::Closed);
        }
        let current = state.current.as_ref().ok_or(SubmitError::NoQuestion)?;
        if current.question_id != question_id {
            return Err(SubmitError::WrongQuestion(question_id.to_string()));
        }
        if state.answer.is_some() {
            return Err(SubmitError::AlreadyAnswered(question_id.to_string()));
        }
        state.answer = Some(answer);
        self.shared.1.notify_all();
        Ok(())
    }

    pub fn close(&self) {
        self.state().closed = true;
        self.shared.1.notify_all();
    }

    fn publish(&self, question: &Question, budget: Duration) -> Result<(), SubmitError> {
        let now = self.clock.now_ms();
        let mut state = self.state();
        if state.closed {
            return Err(SubmitError::Closed);
        }
        state.current = Some(ProctorPrompt {
            question_id: question.id.clone(),
            prompt: question.prompt.clone(),
            prompt_modality: question.prompt_modality,
            attachments: question.attachments.clone(),
            published_at_ms: now,
            deadline_ms: now + budget.as_millis() as u64,
        });
        state.answer = None;
        Ok(())
    }

    /// Waits for the answer to the published question; `Err` if the
    /// channel closed first.
    fn await_answer(&self, budget: Duration) -> Result<Option<ProctorAnswer>, SubmitError> {
        let guard = self.state();
        let (mut state, _) = self
            .shared
            .1
            .wait_timeout_while(guard, budget, |s| s.answer.is_none() && !s.closed)
            .unwrap_or_else(|p| p.into_inner());
        let answer = state.answer.take();
        state.current = None;
        if answer.is_none() && state.closed {
            return Err(SubmitError::Closed);
        }
        Ok(answer)
    }
}

/// A person answering through a proctor.
pub struct HumanSubject {
    channel: ProctorChannel,
}

impl HumanSubject {
    pub fn new(channel: ProctorChannel) -> Self {
        HumanSubject { channel }
    }
}

impl Subject for HumanSubject {
    fn respond(&mut self, question: &Question, budget: Duration) -> Reply {
        if let Err(e) = self.channel.publish(question, budget) {
            return Reply::Transport(e.to_string());
        }
        match self.channel.await_answer(budget) {
            Err(e) => Reply::Transport(e.to_string()),
            Ok(None) => Reply::NoReply,
            Ok(Some(ProctorAnswer::CannotBeAsked)) => Reply::Rejected,
            Ok(Some(ProctorAnswer::Text(t))) => Reply::Items(vec![FeedbackItem::Text(t)]),
            Ok(Some(ProctorAnswer::Attachment { path, modality })) => {
                Reply::Items(vec![FeedbackItem::Attachment { path, modality }])
            }
        }
    }
}
