//! The published 2014 leaderboard and its recomputation.

use aiq_core::{rank_entries, CohortEntry, StatsError};
use serde::{Deserialize, Serialize};

/// Published values are given to two decimals.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenRow {
    pub rank: usize,
    pub region: String,
    pub country: String,
    pub label: String,
    pub absolute_iq: f64,
    pub relative_iq: f64,
}

impl GoldenRow {
    /// Stable id used when the row enters a cohort. Zero-padded so that id
    /// order, the tie-break of the ranking, follows the published order.
    pub fn subject_id(&self) -> String {
        format!("pub-{:02}", self.rank)
    }

    pub fn place(&self) -> String {
        [self.region.as_str(), self.country.as_str()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" / ")
    }
}

pub fn parse(text: &str) -> Result<Vec<GoldenRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

/// The shipped table.
pub fn table() -> Vec<GoldenRow> {
    parse(crate::GOLDEN_TABLE).expect("shipped golden table parses")
}

pub fn cohort_entries(rows: &[GoldenRow]) -> Vec<CohortEntry> {
    rows.iter()
        .map(|r| CohortEntry {
            subject_id: r.subject_id(),
            label: r.label.clone(),
            region: Some(r.place()).filter(|p| !p.is_empty()),
            absolute_iq: r.absolute_iq,
            flagged: false,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparedRow {
    pub published_rank: usize,
    pub rank: usize,
    pub label: String,
    pub place: String,
    pub absolute_iq: f64,
    pub published: f64,
    pub recomputed: f64,
    pub delta: f64,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenComparison {
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
    pub tolerance: f64,
    pub matched: usize,
    pub rows: Vec<ComparedRow>,
}

/// Recomputes the deviation IQs of `rows` from their absolute IQs and sets
/// them beside the published values. Rows come back in recomputed rank order.
pub fn compare(rows: &[GoldenRow], tolerance: f64) -> Result<GoldenComparison, StatsError> {
    let result = rank_entries(cohort_entries(rows))?;
    let compared: Vec<ComparedRow> = result
        .rows
        .iter()
        .map(|lr| {
            let g = rows
                .iter()
                .find(|g| g.subject_id() == lr.subject_id)
                .expect("every ranked row comes from the input");
            let delta = lr.deviation_iq - g.relative_iq;
            ComparedRow {
                published_rank: g.rank,
                rank: lr.rank,
                label: g.label.clone(),
                place: g.place(),
                absolute_iq: g.absolute_iq,
                published: g.relative_iq,
                recomputed: lr.deviation_iq,
                delta,
                matches: delta.abs() <= tolerance,
            }
        })
        .collect();
    Ok(GoldenComparison {
        mean: result.mean,
        std_dev: result.std_dev,
        count: result.count,
        tolerance,
        matched: compared.iter().filter(|r| r.matches).count(),
        rows: compared,
    })
}
