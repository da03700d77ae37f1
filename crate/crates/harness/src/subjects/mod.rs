//! Subject adapters: the things a test paper is administered to.
//!
//! Every adapter implements [`Subject`]; [`SubjectHandle::ask`] wraps it with
//! the protocol rules that do not depend on the kind of subject: modality
//! gating before any contact, and the per-question time budget enforced on
//! the wall clock whether or not the subject cooperates.

mod http;
mod human;
mod scripted;
mod simulated;

use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use aiq_core::{FeedbackItem, Question, ResponseOutcome, SubjectDescriptor};

use crate::clock::Clock;

pub use http::{extract_items, render_url, HttpEngineSubject, RetryPolicy};
pub use human::{HumanSubject, ProctorAnswer, ProctorChannel, ProctorPrompt, SubmitError};
pub use scripted::{ScriptConfig, ScriptedReply, ScriptedSubject};
pub use simulated::{fact, FactConfig, MachineConfig, SimulatedMachineSubject, UNKNOWN_ANSWER};

/// What a subject produced for one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    /// Feedback items in the subject's own ranking order.
    Items(Vec<FeedbackItem>),
    /// The subject could not receive the question.
    Rejected,
    /// No feedback within the budget.
    NoReply,
    /// The channel to the subject failed.
    Transport(String),
}

pub trait Subject: Send {
    /// Answers one question. Implementations should give up once `budget`
    /// has elapsed; the caller enforces it regardless.
    fn respond(&mut self, question: &Question, budget: Duration) -> Reply;
}

/// Slack on top of the budget before a silent subject is abandoned.
const ABANDON_GRACE: Duration = Duration::from_millis(250);

/// A registered subject. Questions reach the adapter strictly one at a time.
#[derive(Clone)]
pub struct SubjectHandle {
    descriptor: SubjectDescriptor,
    inner: Arc<Mutex<dyn Subject>>,
}

impl SubjectHandle {
    pub fn new(descriptor: SubjectDescriptor, subject: impl Subject + 'static) -> Self {
        SubjectHandle {
            descriptor,
            inner: Arc::new(Mutex::new(subject)),
        }
    }

    pub fn descriptor(&self) -> &SubjectDescriptor {
        &self.descriptor
    }

    /// Delivers `question` and classifies what comes back.
    ///
    /// A question whose modality the subject cannot take in is rejected
    /// without contacting the subject. A reply that takes longer than
    /// `timeout` counts as timed out even if it eventually arrives.
    pub fn ask(
        &self,
        question: &Question,
        timeout: Duration,
        clock: &dyn Clock,
    ) -> ResponseOutcome {
        if !self.descriptor.accepts(question.prompt_modality) {
            return ResponseOutcome::input_rejected(0);
        }
        let start = clock.now_ms();
        let (tx, rx) = mpsc::channel();
        let inner = Arc::clone(&self.inner);
        let q = question.clone();
        std::thread::spawn(move || {
            let mut subject = inner.lock().unwrap_or_else(|p| p.into_inner());
            let _ = tx.send(subject.respond(&q, timeout));
        });
        let reply = rx.recv_timeout(timeout + ABANDON_GRACE).ok();
        let latency = clock.now_ms().saturating_sub(start);
        let timeout_ms = timeout.as_millis() as u64;

        match reply {
            None => ResponseOutcome::timed_out(latency),
            Some(_) if latency > timeout_ms => ResponseOutcome::timed_out(latency),
            Some(Reply::Items(items)) => ResponseOutcome::delivered(items, latency),
            Some(Reply::Rejected) => ResponseOutcome::input_rejected(latency),
            Some(Reply::NoReply) => ResponseOutcome::timed_out(latency),
            Some(Reply::Transport(msg)) => ResponseOutcome::transport_error(msg, latency),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{ManualClock, SystemClock};
    use aiq_core::{Grading, Modality, OutcomeStatus, SubjectKind};
    use std::sync::atomic::{AtomicBool, Ordering};

    fn descriptor(inputs: &[Modality]) -> SubjectDescriptor {
        SubjectDescriptor {
            subject_id: "s".into(),
            display_name: "S".into(),
            kind: SubjectKind::Scripted,
            input_modalities: inputs.iter().copied().collect(),
            output_modalities: [Modality::Text].into_iter().collect(),
            endpoint_config: None,
            region: None,
            label: None,
        }
    }

    fn question(modality: Modality) -> Question {
        Question {
            id: "q".into(),
            subtest_id: "acquire_image".into(),
            prompt: "What shape is this?".into(),
            prompt_modality: modality,
            grading: Grading::AutoContains,
            accepted_answers: vec!["square".into()],
            rubric: None,
            attachments: vec![],
        }
    }

    struct Spy(Arc<AtomicBool>);

    impl Subject for Spy {
        fn respond(&mut self, _: &Question, _: Duration) -> Reply {
            self.0.store(true, Ordering::SeqCst);
            Reply::Items(vec![FeedbackItem::text("square")])
        }
    }

    #[test]
    fn modality_gate_never_contacts_subject() {
        let touched = Arc::new(AtomicBool::new(false));
        let h = SubjectHandle::new(
            descriptor(&[Modality::Text, Modality::Sound]),
            Spy(touched.clone()),
        );
        let o = h.ask(
            &question(Modality::Image),
            Duration::from_secs(180),
            &ManualClock::new(0),
        );
        assert_eq!(o.status(), OutcomeStatus::InputRejected);
        assert!(!touched.load(Ordering::SeqCst));

        let o = h.ask(
            &question(Modality::Text),
            Duration::from_secs(180),
            &ManualClock::new(0),
        );
        assert_eq!(o.status(), OutcomeStatus::Delivered);
        assert!(touched.load(Ordering::SeqCst));
    }

    struct Hang;

    impl Subject for Hang {
        fn respond(&mut self, _: &Question, _: Duration) -> Reply {
            std::thread::sleep(Duration::from_secs(5));
            Reply::Items(vec![FeedbackItem::text("late")])
        }
    }

    #[test]
    fn uncooperative_subject_is_abandoned_at_the_deadline() {
        let h = SubjectHandle::new(descriptor(&[Modality::Text]), Hang);
        let started = std::time::Instant::now();
        let o = h.ask(
            &question(Modality::Text),
            Duration::from_millis(100),
            &SystemClock::new(),
        );
        assert_eq!(o.status(), OutcomeStatus::TimedOut);
        assert!(started.elapsed() < Duration::from_secs(2));
    }
}
