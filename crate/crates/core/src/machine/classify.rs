use core::fmt;

use serde::{Deserialize, Serialize};

use super::{MachineEvent, MachineSnapshot};

/// Intelligent-system class of a machine over its observed life cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemType {
    /// No input and no output modality: information-isolated.
    Type0,
    /// Fixed pre-stored knowledge with working input or output.
    Type1,
    /// Mastered knowledge grows from outside; nothing is ever innovated.
    Type2,
    /// Holds innovated knowledge.
    Type3,
    /// Any other combination.
    Type9,
}

impl SystemType {
    pub fn number(self) -> u8 {
        match self {
            SystemType::Type0 => 0,
            SystemType::Type1 => 1,
            SystemType::Type2 => 2,
            SystemType::Type3 => 3,
            SystemType::Type9 => 9,
        }
    }
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type-{}", self.number())
    }
}

/// Classifies a machine from its event trace and the states at the start
/// and end of the trace. An empty trace is classified from the two states.
///
/// The rules are applied in order:
/// 1. both modality sets empty: [`SystemType::Type0`], regardless of knowledge;
/// 2. `K_M` non-empty, its element set never changed and `K_N` never held
///    anything: [`SystemType::Type1`];
/// 3. `K_M` non-empty and larger at the end, `K_N` never held anything:
///    [`SystemType::Type2`];
/// 4. `K_M` and `K_N` both non-empty at the end: [`SystemType::Type3`];
/// 5. otherwise [`SystemType::Type9`].
pub fn classify_machine(
    trace: &[MachineEvent],
    initial: &MachineSnapshot,
    final_state: &MachineSnapshot,
) -> SystemType {
    if final_state.input_modalities.is_empty() && final_state.output_modalities.is_empty() {
        return SystemType::Type0;
    }

    let mastered = !final_state.mastered.is_empty();
    let mastered_changed =
        initial.mastered != final_state.mastered || trace.iter().any(|e| e.delta_mastered != 0);
    let mastered_grew = final_state.mastered.len() > initial.mastered.len();
    let ever_innovated = !initial.innovated.is_empty()
        || !final_state.innovated.is_empty()
        || trace.iter().any(|e| e.delta_innovated > 0);

    if mastered && !mastered_changed && !ever_innovated {
        SystemType::Type1
    } else if mastered && mastered_grew && !ever_innovated {
        SystemType::Type2
    } else if mastered && !final_state.innovated.is_empty() {
        SystemType::Type3
    } else {
        SystemType::Type9
    }
}
