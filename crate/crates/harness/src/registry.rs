//! Subject registry: a JSON array of subject descriptors, with the extra
//! per-kind settings fixtures need (`script` for scripted subjects,
//! `machine` for simulated machines).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use aiq_core::{SubjectDescriptor, SubjectKind, World};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::subjects::{
    HttpEngineSubject, HumanSubject, MachineConfig, ProctorChannel, ScriptConfig, ScriptedSubject,
    SimulatedMachineSubject, SubjectHandle,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("duplicate subject id {0}")]
    Duplicate(String),
    #[error("unknown subject {0}")]
    Unknown(String),
    #[error("subject {0}: http_engine needs an endpoint_config")]
    MissingEndpoint(String),
    #[error("subject {id}: invalid extraction rule: {reason}")]
    BadExtraction { id: String, reason: String },
    #[error("subject {0}: url_template has no {{query}} placeholder")]
    MissingPlaceholder(String),
    #[error("subject {0}: empty modality set")]
    NoModalities(String),
    #[error("subject {0}: human subjects need a proctor channel")]
    NoProctor(String),
}

/// Knowledge of a registered simulated machine. Its `Q_I`/`Q_O` are the
/// descriptor's modality sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSpec {
    #[serde(default)]
    pub facts: Vec<crate::subjects::FactConfig>,
    #[serde(default)]
    pub learn_from_shared: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    #[serde(flatten)]
    pub descriptor: SubjectDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ScriptConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub machine: Option<MachineSpec>,
}

/// Shared resources subject adapters are built with.
#[derive(Clone)]
pub struct BuildContext {
    pub clock: Arc<dyn Clock>,
    pub world: Arc<Mutex<World>>,
    pub proctor: Option<ProctorChannel>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl Registry {
    pub fn new(entries: Vec<RegistryEntry>) -> Result<Self, RegistryError> {
        let mut map = BTreeMap::new();
        for e in entries {
            validate(&e)?;
            let id = e.descriptor.subject_id.clone();
            if map.insert(id.clone(), e).is_some() {
                return Err(RegistryError::Duplicate(id));
            }
        }
        Ok(Registry { entries: map })
    }

    pub fn get(&self, subject_id: &str) -> Option<&RegistryEntry> {
        self.entries.get(subject_id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &SubjectDescriptor> {
        self.entries.values().map(|e| &e.descriptor)
    }

    pub fn build(
        &self,
        subject_id: &str,
        ctx: &BuildContext,
    ) -> Result<SubjectHandle, RegistryError> {
        let entry = self
            .get(subject_id)
            .ok_or_else(|| RegistryError::Unknown(subject_id.to_string()))?;
        let d = entry.descriptor.clone();
        let id = d.subject_id.clone();
        Ok(match d.kind {
            SubjectKind::Scripted => {
                let script = entry.script.clone().unwrap_or_default();
                SubjectHandle::new(d, ScriptedSubject::new(script, ctx.clock.clone()))
            }
            SubjectKind::SimulatedMachine => {
                let spec = entry.machine.clone().unwrap_or_default();
                let config = MachineConfig {
                    q_i: d.input_modalities.iter().copied().collect(),
                    q_o: d.output_modalities.iter().copied().collect(),
                    facts: spec.facts,
                    learn_from_shared: spec.learn_from_shared,
                };
                let machine =
                    config.build(&mut ctx.world.lock().unwrap_or_else(|p| p.into_inner()));
                let subject = SimulatedMachineSubject::new(machine, ctx.world.clone())
                    .learning_from_shared(config.learn_from_shared);
                SubjectHandle::new(d, subject)
            }
            SubjectKind::HttpEngine => {
                let endpoint = d
                    .endpoint_config
                    .clone()
                    .ok_or_else(|| RegistryError::MissingEndpoint(id.clone()))?;
                let subject =
                    HttpEngineSubject::new(endpoint).map_err(|e| RegistryError::BadExtraction {
                        id,
                        reason: e.to_string(),
                    })?;
                SubjectHandle::new(d, subject)
            }
            SubjectKind::Human => {
                let channel = ctx.proctor.clone().ok_or(RegistryError::NoProctor(id))?;
                SubjectHandle::new(d, HumanSubject::new(channel))
            }
        })
    }
}

fn validate(e: &RegistryEntry) -> Result<(), RegistryError> {
    let d = &e.descriptor;
    let id = || d.subject_id.clone();
    match d.kind {
        SubjectKind::HttpEngine => {
            let endpoint = d
                .endpoint_config
                .as_ref()
                .ok_or_else(|| RegistryError::MissingEndpoint(id()))?;
            if !endpoint.url_template.contains("{query}") {
                return Err(RegistryError::MissingPlaceholder(id()));
            }
            regex::Regex::new(&endpoint.extraction).map_err(|err| {
                RegistryError::BadExtraction {
                    id: id(),
                    reason: err.to_string(),
                }
            })?;
        }
        SubjectKind::Human => {}
        // Fixtures may be deliberately mute.
        SubjectKind::Scripted | SubjectKind::SimulatedMachine => return Ok(()),
    }
    if d.input_modalities.is_empty() || d.output_modalities.is_empty() {
        return Err(RegistryError::NoModalities(id()));
    }
    Ok(())
}
