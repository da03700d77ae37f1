use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use aiq_core::answer::normalize;
use aiq_core::{FeedbackItem, Question};
use serde::{Deserialize, Serialize};

use super::{Reply, Subject};
use crate::clock::Clock;

/// Canned reply of a scripted subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Items(Vec<String>),
    Detailed {
        #[serde(default)]
        items: Vec<String>,
        #[serde(default)]
        delay_ms: u64,
        #[serde(default)]
        reject: bool,
        #[serde(default)]
        transport_error: Option<String>,
    },
}

/// Answer map of a scripted subject. Keys are question ids or prompts;
/// prompts are compared after normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptConfig {
    #[serde(default)]
    pub answers: BTreeMap<String, ScriptedReply>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ScriptedReply>,
}

impl ScriptConfig {
    pub fn answer(mut self, key: impl Into<String>, reply: ScriptedReply) -> Self {
        self.answers.insert(key.into(), reply);
        self
    }

    fn lookup(&self, question: &Question) -> Option<&ScriptedReply> {
        if let Some(r) = self.answers.get(&question.id) {
            return Some(r);
        }
        let prompt = normalize(&question.prompt);
        self.answers
            .iter()
            .find(|(k, _)| normalize(k) == prompt)
            .map(|(_, r)| r)
            .or(self.default.as_ref())
    }
}

/// Fixture subject that replays an answer map, optionally taking simulated
/// time to do so.
pub struct ScriptedSubject {
    script: ScriptConfig,
    clock: Arc<dyn Clock>,
}

impl ScriptedSubject {
    pub fn new(script: ScriptConfig, clock: Arc<dyn Clock>) -> Self {
        ScriptedSubject { script, clock }
    }
}

fn texts(items: &[String]) -> Vec<FeedbackItem> {
    items.iter().map(FeedbackItem::text).collect()
}

impl Subject for ScriptedSubject {
    fn respond(&mut self, question: &Question, _budget: Duration) -> Reply {
        match self.script.lookup(question) {
            None => Reply::Items(vec![FeedbackItem::text(super::UNKNOWN_ANSWER)]),
            Some(ScriptedReply::Text(t)) => Reply::Items(vec![FeedbackItem::text(t)]),
            Some(ScriptedReply::Items(items)) => Reply::Items(texts(items)),
            Some(ScriptedReply::Detailed {
                items,
                delay_ms,
                reject,
                transport_error,
            }) => {
                self.clock.sleep(Duration::from_millis(*delay_ms));
                if *reject {
                    Reply::Rejected
                } else if let Some(msg) = transport_error {
                    Reply::Transport(msg.clone())
                } else {
                    Reply::Items(texts(items))
                }
            }
        }
    }
}
