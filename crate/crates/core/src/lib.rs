//! Scoring core for the AI IQ benchmarking harness.
//!
//! Everything in this crate is pure computation over owned data and builds
//! without `std` (only `alloc` is required):
//!
//! - [`machine`]: the standard intelligent machine (knowledge sets, modality
//!   sets, the input/output/control/innovate operations) and the trace-based
//!   type classifier.
//! - [`scale`]: the 15 weighted sub-tests grouped into 4 ability categories.
//! - [`bank`]: question bank validation and stratified paper sampling.
//! - [`answer`]: answer normalization and the containment/numeric matchers.
//! - [`subject`]: subject descriptors and response outcomes.
//! - [`session`]: the event-sourced test session state machine.
//! - [`stats`]: absolute IQ, population standard deviation, deviation IQ and
//!   cohort leaderboards.
//!
//! IO, timing, subject adapters, persistence and the CLI live in the `aiq`
//! crate.

#![no_std]

extern crate alloc;

pub mod answer;
pub mod bank;
pub mod machine;
pub mod modality;
pub mod scale;
pub mod session;
pub mod stats;
pub mod subject;

pub use bank::{BankDocument, BankError, BankIssue, Grading, Question, QuestionBank, TestPaper};
pub use machine::{
    classify_machine, ControlDirective, ElementId, KnowledgeElement, MachineError, MachineEvent,
    MachineOp, MachineSnapshot, Mark, Origin, StandardIntelligentMachine, SyncDirection,
    SystemType, World,
};
pub use modality::Modality;
pub use scale::{AbilityCategory, Category, IntelligenceScale, ScaleViolation, SubTest, Weight};
pub use session::{
    auto_grade, Grade, GradeSource, PaperEntry, QuestionRecord, Session, SessionError,
    SessionEvent, SessionStatus, SubtestScoreVector, Verdict,
};
pub use stats::{
    absolute_iq, deviation_iq, leaderboard, mean, population_std_dev, rank_entries, CohortEntry,
    CohortResult, LeaderboardRow, ScoreVector, StatsError,
};
pub use subject::{
    EndpointConfig, FeedbackItem, OutcomeStatus, ResponseOutcome, SubjectDescriptor, SubjectKind,
};

/// Per-question time budget of the test protocol, in milliseconds.
pub const DEFAULT_TIMEOUT_MS: u64 = 180_000;

/// Points earned by one correct reply.
pub const POINTS_PER_CORRECT: u32 = 25;

/// Questions drawn from every sub-test for one test paper.
pub const QUESTIONS_PER_SUBTEST: usize = 4;
