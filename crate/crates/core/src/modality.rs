use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Form in which a piece of knowledge is carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Sound,
    Image,
    Temperature,
    Force,
    Electromagnetic,
}

impl Modality {
    pub const ALL: [Modality; 6] = [
        Modality::Text,
        Modality::Sound,
        Modality::Image,
        Modality::Temperature,
        Modality::Force,
        Modality::Electromagnetic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Sound => "sound",
            Modality::Image => "image",
            Modality::Temperature => "temperature",
            Modality::Force => "force",
            Modality::Electromagnetic => "electromagnetic",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = UnknownModality;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or(UnknownModality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown modality")]
pub struct UnknownModality;
