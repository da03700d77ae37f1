//! Operational shell around `aiq-core`: subject adapters, the JSON-lines
//! session store, configuration, the `aiq` CLI and the HTTP service used by
//! the grading console.

pub mod cli;
pub mod clock;
pub mod config;
pub mod golden;
pub mod registry;
pub mod report;
pub mod runner;
pub mod service;
pub mod store;
pub mod subjects;

pub use aiq_core as core;

/// Sample bank shipped with the harness: four questions per sub-test.
pub const SAMPLE_BANK: &str = include_str!("../data/sample_bank.json");

/// Published leaderboard, one row per subject.
pub const GOLDEN_TABLE: &str = include_str!("../data/published_leaderboard.csv");

/// Example subject registry.
pub const SAMPLE_SUBJECTS: &str = include_str!("../data/subjects.json");
