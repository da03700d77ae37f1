#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use aiq::clock::{Clock, ManualClock};
use aiq::config::HarnessConfig;
use aiq::runner::{run_session, LiveSession};
use aiq::store::SessionStore;
use aiq::subjects::{ScriptConfig, ScriptedReply, ScriptedSubject, SubjectHandle};
use aiq_core::{
    IntelligenceScale, Modality, QuestionBank, Session, SubjectDescriptor, SubjectKind, Verdict,
};

pub const TIMEOUT: Duration = Duration::from_secs(180);

pub fn scale_and_bank() -> (IntelligenceScale, QuestionBank) {
    let scale = IntelligenceScale::default_scale();
    let bank = HarnessConfig::default().load_bank(&scale).unwrap();
    (scale, bank)
}

pub fn descriptor(id: &str, inputs: &[Modality]) -> SubjectDescriptor {
    SubjectDescriptor {
        subject_id: id.into(),
        display_name: id.into(),
        kind: SubjectKind::Scripted,
        input_modalities: inputs.iter().copied().collect(),
        output_modalities: [Modality::Text].into_iter().collect(),
        endpoint_config: None,
        region: None,
        label: None,
    }
}

pub fn scripted(id: &str, script: ScriptConfig, clock: Arc<ManualClock>) -> SubjectHandle {
    SubjectHandle::new(
        descriptor(id, &Modality::ALL),
        ScriptedSubject::new(script, clock),
    )
}

/// Script answering every question in `bank` with its first accepted
/// answer when `right(question_id)` holds, and with a miss otherwise.
pub fn answer_key(bank: &QuestionBank, right: impl Fn(&str) -> bool) -> ScriptConfig {
    let mut script = ScriptConfig::default();
    for q in bank.questions() {
        let reply = match q.accepted_answers.first() {
            Some(a) if right(&q.id) => a.clone(),
            _ => "no idea".to_string(),
        };
        script = script.answer(q.id.clone(), ScriptedReply::Text(reply));
    }
    script
}

/// Administers a sampled paper and grades every manual question with
/// `verdict(question_id)`.
pub fn administer(
    store: &SessionStore,
    session_id: &str,
    subject: &SubjectHandle,
    seed: u64,
    verdict: impl Fn(&str) -> Verdict,
    clock: &Arc<ManualClock>,
) -> Session {
    let (scale, bank) = scale_and_bank();
    let paper = bank.sample_paper(&scale, seed).unwrap();
    let subject_id = &subject.descriptor().subject_id;
    let live = LiveSession::start(
        store,
        session_id,
        subject_id,
        "test",
        &paper,
        &bank,
        clock.now_ms(),
    )
    .unwrap();
    let done = run_session(&live, subject, &bank, TIMEOUT, &**clock).unwrap();
    let pending: Vec<String> = done.pending().map(|r| r.question_id.clone()).collect();
    for q in pending {
        let v = verdict(&q);
        live.commit(|s| s.submit_manual_grade(&q, v, "tester", false, clock.now_ms()))
            .unwrap();
    }
    live.snapshot()
}
