use std::sync::{Arc, Mutex};
use std::time::Duration;

use aiq_core::answer::normalize;
use aiq_core::{
    FeedbackItem, Mark, Modality, Question, StandardIntelligentMachine, SyncDirection, World,
};
use serde::{Deserialize, Serialize};

use super::{Reply, Subject};

/// Reply given when nothing in the knowledge base matches the prompt.
pub const UNKNOWN_ANSWER: &str = "unknown";

const FACT_SEPARATOR: &str = " => ";

/// Encodes a prompt/answer pair as knowledge-element content.
pub fn fact(prompt: &str, answer: &str) -> String {
    format!("{prompt}{FACT_SEPARATOR}{answer}")
}

fn parse_fact(content: &str) -> Option<(&str, &str)> {
    content.split_once(FACT_SEPARATOR)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactConfig {
    pub prompt: String,
    pub answer: String,
}

/// Registry form of a simulated machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineConfig {
    pub q_i: Vec<Modality>,
    pub q_o: Vec<Modality>,
    #[serde(default)]
    pub facts: Vec<FactConfig>,
    /// Pull the shared knowledge base before every question.
    #[serde(default)]
    pub learn_from_shared: bool,
}

impl MachineConfig {
    pub fn build(&self, world: &mut World) -> StandardIntelligentMachine {
        let elements: Vec<_> = self
            .facts
            .iter()
            .map(|f| world.draw(fact(&f.prompt, &f.answer), Modality::Text))
            .collect();
        StandardIntelligentMachine::new(self.q_i.iter().copied(), self.q_o.iter().copied())
            .with_knowledge(elements)
    }
}

/// A standard intelligent machine answering from its keyed knowledge base.
pub struct SimulatedMachineSubject {
    machine: StandardIntelligentMachine,
    world: Arc<Mutex<World>>,
    learn_from_shared: bool,
}

impl SimulatedMachineSubject {
    pub fn new(machine: StandardIntelligentMachine, world: Arc<Mutex<World>>) -> Self {
        SimulatedMachineSubject {
            machine,
            world,
            learn_from_shared: false,
        }
    }

    pub fn learning_from_shared(mut self, learn: bool) -> Self {
        self.learn_from_shared = learn;
        self
    }

    pub fn machine(&self) -> &StandardIntelligentMachine {
        &self.machine
    }

    pub fn sync(&mut self, direction: SyncDirection) -> usize {
        let mut world = self.world.lock().unwrap_or_else(|p| p.into_inner());
        self.machine.sync_shared_knowledge(&mut world, direction)
    }
}

impl Subject for SimulatedMachineSubject {
    fn respond(&mut self, question: &Question, _budget: Duration) -> Reply {
        if !self
            .machine
            .input_modalities()
            .contains(&question.prompt_modality)
        {
            return Reply::Rejected;
        }
        if self.learn_from_shared {
            self.sync(SyncDirection::Pull);
        }
        let key = normalize(&question.prompt);
        let found = self.machine.mastered().find_map(|e| {
            let (prompt, answer) = parse_fact(&e.content)?;
            (normalize(prompt) == key).then(|| (e.id, answer.to_string()))
        });
        let Some((id, answer)) = found else {
            return Reply::Items(vec![FeedbackItem::text(UNKNOWN_ANSWER)]);
        };
        let mut world = self.world.lock().unwrap_or_else(|p| p.into_inner());
        match self.machine.output_knowledge(id, &mut world) {
            Ok(Mark::Success) => Reply::Items(vec![FeedbackItem::text(answer)]),
            Ok(Mark::Failure) => Reply::NoReply,
            Err(e) => Reply::Transport(e.to_string()),
        }
    }
}
