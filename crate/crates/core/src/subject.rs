use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::modality::Modality;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Scripted,
    SimulatedMachine,
    HttpEngine,
    Human,
}

/// How to query a search/answer engine over HTTP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// URL with a `{query}` placeholder for the percent-encoded prompt.
    pub url_template: String,
    /// Regular expression applied to the response body; capture group 1 of
    /// every match, in page order, becomes one feedback item.
    pub extraction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectDescriptor {
    pub subject_id: String,
    pub display_name: String,
    pub kind: SubjectKind,
    pub input_modalities: BTreeSet<Modality>,
    pub output_modalities: BTreeSet<Modality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_config: Option<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SubjectDescriptor {
    pub fn accepts(&self, modality: Modality) -> bool {
        self.input_modalities.contains(&modality)
    }
}

/// One piece of feedback returned by a subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackItem {
    Text(String),
    Attachment { path: String, modality: Modality },
}

impl FeedbackItem {
    pub fn text(s: impl Into<String>) -> Self {
        FeedbackItem::Text(s.into())
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FeedbackItem::Text(t) => Some(t),
            FeedbackItem::Attachment { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Delivered,
    InputRejected,
    TimedOut,
    TransportError,
}

/// What came back from asking one question. Items are non-empty exactly when
/// the status is [`OutcomeStatus::Delivered`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOutcome")]
pub struct ResponseOutcome {
    status: OutcomeStatus,
    items: Vec<FeedbackItem>,
    latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostic: Option<String>,
}

#[derive(Deserialize)]
struct RawOutcome {
    status: OutcomeStatus,
    #[serde(default)]
    items: Vec<FeedbackItem>,
    latency_ms: u64,
    #[serde(default)]
    diagnostic: Option<String>,
}

impl TryFrom<RawOutcome> for ResponseOutcome {
    type Error = &'static str;

    fn try_from(raw: RawOutcome) -> Result<Self, Self::Error> {
        if (raw.status == OutcomeStatus::Delivered) == raw.items.is_empty() {
            return Err("outcome items must be non-empty exactly when delivered");
        }
        Ok(ResponseOutcome {
            status: raw.status,
            items: raw.items,
            latency_ms: raw.latency_ms,
            diagnostic: raw.diagnostic,
        })
    }
}

impl ResponseOutcome {
    /// A delivered reply. An empty item list is not a reply and becomes a
    /// transport error.
    pub fn delivered(items: Vec<FeedbackItem>, latency_ms: u64) -> Self {
        if items.is_empty() {
            return Self::transport_error("subject returned no feedback items", latency_ms);
        }
        ResponseOutcome {
            status: OutcomeStatus::Delivered,
            items,
            latency_ms,
            diagnostic: None,
        }
    }

    pub fn input_rejected(latency_ms: u64) -> Self {
        Self::empty(OutcomeStatus::InputRejected, latency_ms, None)
    }

    pub fn timed_out(latency_ms: u64) -> Self {
        Self::empty(OutcomeStatus::TimedOut, latency_ms, None)
    }

    pub fn transport_error(diagnostic: impl Into<String>, latency_ms: u64) -> Self {
        Self::empty(
            OutcomeStatus::TransportError,
            latency_ms,
            Some(diagnostic.into()),
        )
    }

    fn empty(status: OutcomeStatus, latency_ms: u64, diagnostic: Option<String>) -> Self {
        ResponseOutcome {
            status,
            items: Vec::new(),
            latency_ms,
            diagnostic,
        }
    }

    pub fn status(&self) -> OutcomeStatus {
        self.status
    }

    pub fn items(&self) -> &[FeedbackItem] {
        &self.items
    }

    pub fn latency_ms(&self) -> u64 {
        self.latency_ms
    }

    pub fn diagnostic(&self) -> Option<&str> {
        self.diagnostic.as_deref()
    }

    /// The item that is graded: the first one.
    pub fn first_item(&self) -> Option<&FeedbackItem> {
        self.items.first()
    }
}
