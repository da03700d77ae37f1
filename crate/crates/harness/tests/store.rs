mod common;

use std::fs;
use std::io::Write;
use std::sync::Arc;

use aiq::clock::{Clock, ManualClock};
use aiq::runner::{run_session, LiveSession};
use aiq::store::{read_log, SessionStore, StoreError};
use aiq_core::{SessionStatus, Verdict};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn stored_sessions_replay_to_the_same_scores(
        seed in any::<u64>(),
        right in prop::collection::vec(any::<bool>(), 60),
        verdicts in prop::collection::vec(any::<bool>(), 12),
    ) {
        let (scale, bank) = scale_and_bank();
        let ids: Vec<&str> = bank.questions().iter().map(|q| q.id.as_str()).collect();
        let script = answer_key(&bank, |q| right[ids.iter().position(|i| *i == q).unwrap()]);
        let clock = Arc::new(ManualClock::new(5_000));
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let subject = scripted("fixture", script, clock.clone());
        let manual: Vec<&str> = bank.questions().iter().filter(|q| !q.grading.is_auto()).map(|q| q.id.as_str()).collect();
        let live = administer(&store, "replayed", &subject, seed, |q| {
            if verdicts[manual.iter().position(|m| *m == q).unwrap()] { Verdict::Correct } else { Verdict::Incorrect }
        }, &clock);
        prop_assert_eq!(live.status, SessionStatus::Complete);

        let reloaded = store.load("replayed").unwrap();
        prop_assert_eq!(&reloaded, &live);
        prop_assert_eq!(reloaded.subtest_scores(&scale).unwrap(), live.subtest_scores(&scale).unwrap());
    }
}

fn finished_session(store: &SessionStore, id: &str) -> aiq_core::Session {
    let (_, bank) = scale_and_bank();
    let clock = Arc::new(ManualClock::new(0));
    let subject = scripted("fixture", answer_key(&bank, |_| true), clock.clone());
    administer(store, id, &subject, 42, |_| Verdict::Correct, &clock)
}

#[test]
fn unterminated_damaged_tail_is_cut_off() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let (scale, bank) = scale_and_bank();
    let paper = bank.sample_paper(&scale, 3).unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let live = LiveSession::start(&store, "crashy", "fixture", "test", &paper, &bank, 0).unwrap();
    for _ in 0..5 {
        live.commit(|s| Ok(vec![s.dispatch(clock.now_ms())?]))
            .unwrap();
        let qid = live.snapshot().in_flight().unwrap().0.to_string();
        let q = bank.get(&qid).unwrap();
        live.commit(|s| s.record_outcome(q, aiq_core::ResponseOutcome::timed_out(1), 1))
            .unwrap();
    }
    let before = live.snapshot();
    drop(live);

    // A crash halfway through writing the next line.
    let path = store.path_for("crashy").unwrap();
    let intact = fs::read(&path).unwrap();
    let last_line = intact[..intact.len() - 1]
        .rsplit(|&b| b == b'\n')
        .next()
        .unwrap()
        .to_vec();
    fs::OpenOptions::new()
        .append(true)
        .open(&path)
        .unwrap()
        .write_all(&last_line[..last_line.len() / 2])
        .unwrap();

    let contents = read_log(&path).unwrap();
    assert_eq!(contents.truncated_at, Some(intact.len() as u64));
    assert_eq!(store.load("crashy").unwrap(), before);

    // Reopening cuts the tail and appends after the last good event.
    let (session, log) = store.open_session("crashy").unwrap();
    assert_eq!(fs::read(&path).unwrap(), intact);
    let next_seq = log.next_seq();
    let live = LiveSession::new(session, log);
    let subject = scripted("fixture", answer_key(&bank, |_| true), clock.clone());
    let done = run_session(&live, &subject, &bank, TIMEOUT, &*clock).unwrap();
    assert_eq!(done.records.len(), 60);
    let contents = read_log(&path).unwrap();
    assert_eq!(contents.truncated_at, None);
    assert_eq!(contents.events[next_seq as usize - 1].seq, next_seq);
    assert_eq!(store.load("crashy").unwrap(), done);
}

#[test]
fn question_in_flight_at_a_crash_is_asked_again() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let (scale, bank) = scale_and_bank();
    let paper = bank.sample_paper(&scale, 3).unwrap();
    let live = LiveSession::start(&store, "resumed", "fixture", "test", &paper, &bank, 0).unwrap();
    live.commit(|s| Ok(vec![s.dispatch(0)?])).unwrap();
    drop(live);

    let (session, log) = store.open_session("resumed").unwrap();
    let first = session.in_flight().unwrap().0.to_string();
    let clock = Arc::new(ManualClock::new(10));
    let subject = scripted("fixture", answer_key(&bank, |_| true), clock.clone());
    let done = run_session(
        &LiveSession::new(session, log),
        &subject,
        &bank,
        TIMEOUT,
        &*clock,
    )
    .unwrap();
    assert_eq!(done.records.len(), 60);
    assert!(done.record(&first).is_some());
}

#[test]
fn flipped_byte_in_the_middle_is_reported_with_its_seq() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    finished_session(&store, "flipped");
    let path = store.path_for("flipped").unwrap();
    let mut bytes = fs::read(&path).unwrap();
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(
            bytes
                .iter()
                .enumerate()
                .filter(|(_, b)| **b == b'\n')
                .map(|(i, _)| i + 1),
        )
        .collect();
    // Inside the tenth line, away from its edges.
    let at = (line_starts[9] + line_starts[10]) / 2;
    bytes[at] ^= 0x01;
    fs::write(&path, &bytes).unwrap();

    let err = store.load("flipped").unwrap_err();
    assert!(matches!(err, StoreError::Corrupt { seq: 10, .. }), "{err}");
    assert!(
        err.to_string().starts_with("corrupt event at seq 10: "),
        "{err}"
    );
    assert!(store.open_session("flipped").is_err());
}

#[test]
fn sessions_are_listed_and_ids_checked() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    finished_session(&store, "b-2");
    finished_session(&store, "a-1");
    assert_eq!(store.list().unwrap(), ["a-1", "b-2"]);
    assert_eq!(store.load_all().unwrap().len(), 2);
    assert!(matches!(
        store.load("../etc/passwd"),
        Err(StoreError::InvalidId(_))
    ));
    assert!(matches!(
        store.load("missing"),
        Err(StoreError::NotFound(_))
    ));
    let (scale, bank) = scale_and_bank();
    let paper = bank.sample_paper(&scale, 1).unwrap();
    assert!(matches!(
        LiveSession::start(&store, "a-1", "x", "c", &paper, &bank, 0),
        Err(aiq::runner::RunError::Store(StoreError::Exists(_)))
    ));
}
