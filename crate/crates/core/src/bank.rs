//! Question bank validation and stratified paper sampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::modality::Modality;
use crate::scale::IntelligenceScale;
use crate::QUESTIONS_PER_SUBTEST;

/// Questions per sub-test in a full-size bank.
pub const CONFORMING_PER_SUBTEST: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    AutoContains,
    AutoNumeric,
    Manual,
}

impl Grading {
    pub fn is_auto(self) -> bool {
        self != Grading::Manual
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub subtest_id: String,
    pub prompt: String,
    pub prompt_modality: Modality,
    pub grading: Grading,
    #[serde(default)]
    pub accepted_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rubric: Option<String>,
    /// Prompt payload files, relative to the bank document.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<String>,
}

/// On-disk shape of a bank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankDocument {
    pub scale_id: String,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueReason {
    ScaleMismatch { expected: String, found: String },
    UnknownSubtest(String),
    InsufficientQuestions { subtest_id: String, count: usize },
    DuplicateId,
    MissingAcceptedAnswers,
    AcceptedAnswersOnManual,
    MissingRubric,
}

impl fmt::Display for IssueReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueReason::ScaleMismatch { expected, found } => {
                write!(f, "bank is for scale {found}, expected {expected}")
            }
            IssueReason::UnknownSubtest(s) => write!(f, "unknown subtest_id {s}"),
            IssueReason::InsufficientQuestions { subtest_id, count } => write!(
                f,
                "insufficient questions in {subtest_id}: {count} < {QUESTIONS_PER_SUBTEST}"
            ),
            IssueReason::DuplicateId => f.write_str("duplicate id"),
            IssueReason::MissingAcceptedAnswers => {
                f.write_str("auto-graded question without accepted answers")
            }
            IssueReason::AcceptedAnswersOnManual => {
                f.write_str("manual question must not list accepted answers")
            }
            IssueReason::MissingRubric => f.write_str("manual question without rubric"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankIssue {
    pub question_id: Option<String>,
    pub reason: IssueReason,
}

impl fmt::Display for BankIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.question_id {
            Some(id) => write!(f, "{id}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid question bank ({} issue(s)): {}", issues.len(), first_issue(issues))]
pub struct BankError {
    pub issues: Vec<BankIssue>,
}

fn first_issue(issues: &[BankIssue]) -> String {
    issues.first().map(|i| format!("{i}")).unwrap_or_default()
}

/// A bank validated against a scale. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionBank {
    scale_id: String,
    questions: Vec<Question>,
    by_id: BTreeMap<String, usize>,
    by_subtest: BTreeMap<String, Vec<usize>>,
    conforming: bool,
}

impl QuestionBank {
    /// Validates `doc` against `scale`, reporting every problem found.
    pub fn load(doc: BankDocument, scale: &IntelligenceScale) -> Result<Self, BankError> {
        let mut issues = Vec::new();
        if doc.scale_id != scale.id {
            issues.push(BankIssue {
                question_id: None,
                reason: IssueReason::ScaleMismatch {
                    expected: scale.id.clone(),
                    found: doc.scale_id.clone(),
                },
            });
        }

        let mut by_id = BTreeMap::new();
        let mut by_subtest: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, q) in doc.questions.iter().enumerate() {
            let mut issue = |reason| {
                issues.push(BankIssue {
                    question_id: Some(q.id.clone()),
                    reason,
                })
            };
            if by_id.insert(q.id.clone(), i).is_some() {
                issue(IssueReason::DuplicateId);
            }
            if scale.subtest(&q.subtest_id).is_none() {
                issue(IssueReason::UnknownSubtest(q.subtest_id.clone()));
            }
            match q.grading {
                Grading::Manual => {
                    if !q.accepted_answers.is_empty() {
                        issue(IssueReason::AcceptedAnswersOnManual);
                    }
                    if q.rubric.as_deref().is_none_or(|r| r.trim().is_empty()) {
                        issue(IssueReason::MissingRubric);
                    }
                }
                Grading::AutoContains | Grading::AutoNumeric => {
                    if q.accepted_answers.iter().all(|a| a.trim().is_empty()) {
                        issue(IssueReason::MissingAcceptedAnswers);
                    }
                }
            }
            by_subtest.entry(q.subtest_id.clone()).or_default().push(i);
        }

        for s in &scale.subtests {
            let count = by_subtest.get(&s.id).map_or(0, Vec::len);
            if count < QUESTIONS_PER_SUBTEST {
                issues.push(BankIssue {
                    question_id: None,
                    reason: IssueReason::InsufficientQuestions {
                        subtest_id: s.id.clone(),
                        count,
                    },
                });
            }
        }

        if !issues.is_empty() {
            return Err(BankError { issues });
        }

        let conforming = scale
            .subtests
            .iter()
            .all(|s| by_subtest.get(&s.id).map_or(0, Vec::len) == CONFORMING_PER_SUBTEST)
            && doc.questions.len() == CONFORMING_PER_SUBTEST * scale.subtests.len();

        Ok(QuestionBank {
            scale_id: doc.scale_id,
            questions: doc.questions,
            by_id,
            by_subtest,
            conforming,
        })
    }

    pub fn scale_id(&self) -> &str {
        &self.scale_id
    }

    /// Whether the bank has the full-size shape (40 per sub-test).
    pub fn is_conforming(&self) -> bool {
        self.conforming
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.by_id.get(id).map(|&i| &self.questions[i])
    }

    pub fn count_for(&self, subtest_id: &str) -> usize {
        self.by_subtest.get(subtest_id).map_or(0, Vec::len)
    }

    /// Per-sub-test question counts, in scale order.
    pub fn counts(&self, scale: &IntelligenceScale) -> Vec<(String, usize)> {
        scale
            .subtests
            .iter()
            .map(|s| (s.id.clone(), self.count_for(&s.id)))
            .collect()
    }

    /// Draws four distinct questions from every sub-test with a seeded
    /// shuffle. Entries follow the scale's sub-test order, then the order
    /// in which questions were drawn.
    pub fn sample_paper(
        &self,
        scale: &IntelligenceScale,
        seed: u64,
    ) -> Result<TestPaper, BankError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::with_capacity(QUESTIONS_PER_SUBTEST * scale.subtests.len());
        let mut issues = Vec::new();
        for s in &scale.subtests {
            let mut pool: Vec<usize> = self.by_subtest.get(&s.id).cloned().unwrap_or_default();
            if pool.len() < QUESTIONS_PER_SUBTEST {
                issues.push(BankIssue {
                    question_id: None,
                    reason: IssueReason::InsufficientQuestions {
                        subtest_id: s.id.clone(),
                        count: pool.len(),
                    },
                });
                continue;
            }
            let (chosen, _) = pool.partial_shuffle(&mut rng, QUESTIONS_PER_SUBTEST);
            entries.extend(chosen.iter().map(|&i| self.questions[i].id.clone()));
        }
        if !issues.is_empty() {
            return Err(BankError { issues });
        }
        Ok(TestPaper {
            paper_id: format!("{}-seed{}", scale.id, seed),
            seed,
            scale_id: scale.id.clone(),
            entries,
        })
    }
}

/// An ordered, stratified selection of bank questions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestPaper {
    pub paper_id: String,
    pub seed: u64,
    pub scale_id: String,
    pub entries: Vec<String>,
}

impl TestPaper {
    /// Checks stratification and that every entry exists in `bank`.
    pub fn is_stratified(&self, bank: &QuestionBank, scale: &IntelligenceScale) -> bool {
        let unique: BTreeSet<&String> = self.entries.iter().collect();
        if unique.len() != self.entries.len() {
            return false;
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for id in &self.entries {
            match bank.get(id) {
                Some(q) => *counts.entry(q.subtest_id.as_str()).or_default() += 1,
                None => return false,
            }
        }
        counts.len() == scale.subtests.len()
            && scale
                .subtests
                .iter()
                .all(|s| counts.get(s.id.as_str()) == Some(&QUESTIONS_PER_SUBTEST))
    }
}
