//! The standard intelligent machine.
//!
//! A machine masters a finite knowledge set (`K_M`), of which the subset it
//! created itself is tracked separately (`K_N`). It can only take in knowledge
//! whose modality it can identify on input (`Q_I`) and only hand out knowledge
//! whose modality it can express on output (`Q_O`). The world holds the
//! finite shared knowledge set (`K_S`) plus a generator of fresh element ids
//! that stands in for the unbounded knowledge universe.
//!
//! Every operation appends exactly one [`MachineEvent`] to the machine's
//! trace; the trace is what [`classify_machine`] inspects.

mod classify;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::modality::Modality;

pub use classify::{classify_machine, SystemType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub u64);

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

/// Where a knowledge element came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    World,
    Shared,
    Imported,
    Innovated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeElement {
    pub id: ElementId,
    pub content: String,
    pub modality: Modality,
    pub origin: Origin,
}

/// Success (1) or failure (0) mark returned by every machine operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Mark {
    Failure,
    Success,
}

impl Mark {
    pub fn is_success(self) -> bool {
        self == Mark::Success
    }
}

impl From<Mark> for u8 {
    fn from(m: Mark) -> u8 {
        match m {
            Mark::Failure => 0,
            Mark::Success => 1,
        }
    }
}

impl TryFrom<u8> for Mark {
    type Error = &'static str;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Mark::Failure),
            1 => Ok(Mark::Success),
            _ => Err("result mark must be 0 or 1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineOp {
    Input,
    Output,
    Control,
    Innovate,
    Sync,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineEvent {
    pub step: u64,
    pub op: MachineOp,
    pub result_mark: Mark,
    #[serde(rename = "delta_km")]
    pub delta_mastered: i64,
    #[serde(rename = "delta_kn")]
    pub delta_innovated: i64,
}

/// Content rewrite applied by [`ControlDirective::Transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextTransform {
    Lowercase,
    Uppercase,
    CollapseWhitespace,
}

impl TextTransform {
    pub fn apply(self, content: &str) -> String {
        match self {
            TextTransform::Lowercase => content.to_lowercase(),
            TextTransform::Uppercase => content.to_uppercase(),
            TextTransform::CollapseWhitespace => {
                content.split_whitespace().collect::<Vec<_>>().join(" ")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlDirective {
    Copy,
    Delete,
    Transform(TextTransform),
    /// Merge the second element's content into the first; the second is removed.
    Collate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncDirection {
    Push,
    Pull,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MachineError {
    #[error("element {0} is not mastered by the machine")]
    UnknownElement(ElementId),
}

/// Shared knowledge plus the fresh-id source for the knowledge universe.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct World {
    shared: BTreeMap<ElementId, KnowledgeElement>,
    next_id: u64,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    /// Issues an id that has never been issued by this world before.
    pub fn fresh_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Draws a new element from the knowledge universe without sharing it.
    pub fn draw(&mut self, content: impl Into<String>, modality: Modality) -> KnowledgeElement {
        KnowledgeElement {
            id: self.fresh_id(),
            content: content.into(),
            modality,
            origin: Origin::World,
        }
    }

    /// Creates a new element directly in the shared set.
    pub fn publish(&mut self, content: impl Into<String>, modality: Modality) -> ElementId {
        let mut element = self.draw(content, modality);
        element.origin = Origin::Shared;
        let id = element.id;
        self.shared.insert(id, element);
        id
    }

    pub fn shared(&self) -> impl Iterator<Item = &KnowledgeElement> {
        self.shared.values()
    }

    pub fn shared_len(&self) -> usize {
        self.shared.len()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.shared.contains_key(&id)
    }

    pub fn get(&self, id: ElementId) -> Option<&KnowledgeElement> {
        self.shared.get(&id)
    }

    /// Unions `element` into the shared set. Returns `true` if it was new.
    fn incorporate(&mut self, element: KnowledgeElement) -> bool {
        if self.shared.contains_key(&element.id) {
            return false;
        }
        // Keep the generator ahead of any id that entered from elsewhere.
        self.next_id = self.next_id.max(element.id.0 + 1);
        self.shared.insert(element.id, element);
        true
    }
}

/// Externally observable state of a machine at one point of its life cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MachineSnapshot {
    #[serde(rename = "q_i")]
    pub input_modalities: BTreeSet<Modality>,
    #[serde(rename = "q_o")]
    pub output_modalities: BTreeSet<Modality>,
    #[serde(rename = "k_m")]
    pub mastered: BTreeSet<ElementId>,
    #[serde(rename = "k_n")]
    pub innovated: BTreeSet<ElementId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardIntelligentMachine {
    input_modalities: BTreeSet<Modality>,
    output_modalities: BTreeSet<Modality>,
    mastered: BTreeMap<ElementId, KnowledgeElement>,
    innovated: BTreeSet<ElementId>,
    trace: Vec<MachineEvent>,
}

impl StandardIntelligentMachine {
    pub fn new(
        input_modalities: impl IntoIterator<Item = Modality>,
        output_modalities: impl IntoIterator<Item = Modality>,
    ) -> Self {
        Self {
            input_modalities: input_modalities.into_iter().collect(),
            output_modalities: output_modalities.into_iter().collect(),
            mastered: BTreeMap::new(),
            innovated: BTreeSet::new(),
            trace: Vec::new(),
        }
    }

    /// Pre-stores knowledge as part of the initial state. No events are
    /// recorded; use [`input_knowledge`](Self::input_knowledge) for that.
    pub fn with_knowledge(mut self, elements: impl IntoIterator<Item = KnowledgeElement>) -> Self {
        for e in elements {
            if e.origin == Origin::Innovated {
                self.innovated.insert(e.id);
            }
            self.mastered.insert(e.id, e);
        }
        self
    }

    pub fn input_modalities(&self) -> &BTreeSet<Modality> {
        &self.input_modalities
    }

    pub fn output_modalities(&self) -> &BTreeSet<Modality> {
        &self.output_modalities
    }

    pub fn mastered(&self) -> impl Iterator<Item = &KnowledgeElement> {
        self.mastered.values()
    }

    pub fn mastered_len(&self) -> usize {
        self.mastered.len()
    }

    pub fn innovated_len(&self) -> usize {
        self.innovated.len()
    }

    pub fn get(&self, id: ElementId) -> Option<&KnowledgeElement> {
        self.mastered.get(&id)
    }

    pub fn is_innovated(&self, id: ElementId) -> bool {
        self.innovated.contains(&id)
    }

    pub fn trace(&self) -> &[MachineEvent] {
        &self.trace
    }

    pub fn snapshot(&self) -> MachineSnapshot {
        MachineSnapshot {
            input_modalities: self.input_modalities.clone(),
            output_modalities: self.output_modalities.clone(),
            mastered: self.mastered.keys().copied().collect(),
            innovated: self.innovated.clone(),
        }
    }

    /// `K_N ⊆ K_M`.
    pub fn innovated_subset_of_mastered(&self) -> bool {
        self.innovated
            .iter()
            .all(|id| self.mastered.contains_key(id))
    }

    fn record(&mut self, op: MachineOp, mark: Mark, before: (usize, usize)) -> Mark {
        let step = self.trace.last().map_or(1, |e| e.step + 1);
        self.trace.push(MachineEvent {
            step,
            op,
            result_mark: mark,
            delta_mastered: self.mastered.len() as i64 - before.0 as i64,
            delta_innovated: self.innovated.len() as i64 - before.1 as i64,
        });
        mark
    }

    fn sizes(&self) -> (usize, usize) {
        (self.mastered.len(), self.innovated.len())
    }

    /// Takes in an element from the world. Elements already mastered are
    /// incorporated without duplication. Fails (mark 0) when the element's
    /// modality cannot be identified on input.
    pub fn input_knowledge(&mut self, element: KnowledgeElement) -> Mark {
        let before = self.sizes();
        let mark = if self.input_modalities.contains(&element.modality) {
            self.mastered.entry(element.id).or_insert(element);
            Mark::Success
        } else {
            Mark::Failure
        };
        self.record(MachineOp::Input, mark, before)
    }

    /// Hands a mastered element out to the world's shared set.
    pub fn output_knowledge(
        &mut self,
        id: ElementId,
        target: &mut World,
    ) -> Result<Mark, MachineError> {
        let element = self
            .mastered
            .get(&id)
            .ok_or(MachineError::UnknownElement(id))?;
        let before = self.sizes();
        let mark = if self.output_modalities.contains(&element.modality) {
            target.incorporate(element.clone());
            Mark::Success
        } else {
            Mark::Failure
        };
        Ok(self.record(MachineOp::Output, mark, before))
    }

    /// Copies, deletes, transforms or collates mastered elements. Fails
    /// without changing anything when an id is not mastered.
    pub fn control_knowledge(
        &mut self,
        directive: ControlDirective,
        ids: &[ElementId],
        world: &mut World,
    ) -> Mark {
        let before = self.sizes();
        let mark = if self.apply_control(directive, ids, world) {
            Mark::Success
        } else {
            Mark::Failure
        };
        self.record(MachineOp::Control, mark, before)
    }

    fn apply_control(
        &mut self,
        directive: ControlDirective,
        ids: &[ElementId],
        world: &mut World,
    ) -> bool {
        if ids.is_empty() || !ids.iter().all(|id| self.mastered.contains_key(id)) {
            return false;
        }
        match directive {
            ControlDirective::Copy => {
                for id in ids {
                    let mut copy = self.mastered[id].clone();
                    copy.id = self.fresh_id(world);
                    if self.innovated.contains(id) {
                        self.innovated.insert(copy.id);
                    }
                    self.mastered.insert(copy.id, copy);
                }
            }
            ControlDirective::Delete => {
                for id in ids {
                    self.mastered.remove(id);
                    self.innovated.remove(id);
                }
            }
            ControlDirective::Transform(t) => {
                for id in ids {
                    if let Some(e) = self.mastered.get_mut(id) {
                        e.content = t.apply(&e.content);
                    }
                }
            }
            ControlDirective::Collate => {
                let [keep, merge] = ids else { return false };
                if keep == merge {
                    return false;
                }
                let merged = self.mastered.remove(merge).expect("checked above");
                self.innovated.remove(merge);
                let target = self.mastered.get_mut(keep).expect("checked above");
                target.content.push('\n');
                target.content.push_str(&merged.content);
            }
        }
        true
    }

    fn fresh_id(&self, world: &mut World) -> ElementId {
        loop {
            let id = world.fresh_id();
            if !self.mastered.contains_key(&id) && !world.contains(id) {
                return id;
            }
        }
    }

    /// Creates one new element out of two mastered ones (picked by `seed`)
    /// and writes it into both `K_M` and `K_N`. Fails on an empty `K_M`.
    ///
    /// The result depends only on the machine state, the world's id
    /// generator and `seed`.
    pub fn innovate(&mut self, world: &mut World, seed: u64) -> Mark {
        let before = self.sizes();
        if self.mastered.is_empty() {
            return self.record(MachineOp::Innovate, Mark::Failure, before);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keys: Vec<ElementId> = self.mastered.keys().copied().collect();
        let a = &self.mastered[&keys[rng.gen_range(0..keys.len())]];
        let b = &self.mastered[&keys[rng.gen_range(0..keys.len())]];
        let content = format!(
            "innovated[{}+{}]: {} | {}",
            a.id, b.id, a.content, b.content
        );
        let modality = a.modality;
        let id = self.fresh_id(world);
        self.mastered.insert(
            id,
            KnowledgeElement {
                id,
                content,
                modality,
                origin: Origin::Innovated,
            },
        );
        self.innovated.insert(id);
        self.record(MachineOp::Innovate, Mark::Success, before)
    }

    /// Synchronizes with the shared set. Push hands out every mastered
    /// element expressible on output; pull takes in every shared element
    /// identifiable on input. Returns the number of newly transferred
    /// elements.
    pub fn sync_shared_knowledge(&mut self, world: &mut World, direction: SyncDirection) -> usize {
        let before = self.sizes();
        let count = match direction {
            SyncDirection::Push => self
                .mastered
                .values()
                .filter(|e| self.output_modalities.contains(&e.modality))
                .filter(|e| world.incorporate((*e).clone()))
                .count(),
            SyncDirection::Pull => {
                let incoming: Vec<KnowledgeElement> = world
                    .shared()
                    .filter(|e| self.input_modalities.contains(&e.modality))
                    .filter(|e| !self.mastered.contains_key(&e.id))
                    .cloned()
                    .collect();
                let n = incoming.len();
                for e in incoming {
                    self.mastered.insert(e.id, e);
                }
                n
            }
        };
        self.record(MachineOp::Sync, Mark::Success, before);
        count
    }
}
