//! Absolute IQ, deviation IQ and cohort leaderboards.
//!
//! ```text
//! IQ_A = Σ F_i · W_i
//! S    = sqrt( (1/M) Σ (IQ_A,j − mean)² )
//! IQ_d = 100 + (IQ_A − mean) / S
//! ```
//!
//! The deviation IQ is the unscaled form: one standard deviation moves a
//! subject by one point. A cohort with `S = 0` puts everyone at 100.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scale::IntelligenceScale;
use crate::session::{Session, SessionError, SessionStatus, SubtestScoreVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("{scores} scores for {weights} weights")]
    LengthMismatch { scores: usize, weights: usize },
    #[error("score {0} outside [0, 100]")]
    ScoreOutOfRange(f64),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("empty cohort")]
    Empty,
    #[error("session {session_id}: {source}")]
    Session {
        session_id: String,
        source: SessionError,
    },
}

/// Indicator scores `F_i` with their weights `W_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, weights: Vec<f64>) -> Result<Self, StatsError> {
        if scores.len() != weights.len() {
            return Err(StatsError::LengthMismatch {
                scores: scores.len(),
                weights: weights.len(),
            });
        }
        if let Some(&bad) = scores.iter().find(|f| !(0.0..=100.0).contains(*f)) {
            return Err(StatsError::ScoreOutOfRange(bad));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(StatsError::WeightSum(total));
        }
        Ok(ScoreVector { scores, weights })
    }

    /// Pairs sub-test scores with the scale's exact weights.
    pub fn from_subtests(
        scores: &SubtestScoreVector,
        scale: &IntelligenceScale,
    ) -> Result<Self, StatsError> {
        let mut f = Vec::with_capacity(scale.subtests.len());
        for s in &scale.subtests {
            f.push(f64::from(scores.get(&s.id).unwrap_or(0)));
        }
        let w = scale.subtests.iter().map(|s| s.weight.as_f64()).collect();
        ScoreVector::new(f, w)
    }

    /// `N`, the number of indicators.
    pub fn indicator_count(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Weighted sum of indicator scores.
pub fn absolute_iq(v: &ScoreVector) -> f64 {
    v.scores.iter().zip(&v.weights).map(|(f, w)| f * w).sum()
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Standard deviation with divisor `M` (population form).
pub fn population_std_dev(values: &[f64]) -> Result<f64, StatsError> {
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    Ok(libm::sqrt(ss / values.len() as f64))
}

pub fn deviation_iq(iq_a: f64, mean: f64, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        100.0
    } else {
        100.0 + (iq_a - mean) / std_dev
    }
}

/// One subject's input to a leaderboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortEntry {
    pub subject_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub absolute_iq: f64,
    /// Some answers were lost to transport errors.
    #[serde(default)]
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub subject_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub absolute_iq: f64,
    pub deviation_iq: f64,
    #[serde(default)]
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortResult {
    pub mean: f64,
    pub std_dev: f64,
    /// `M`, the number of subjects.
    pub count: usize,
    /// Ordered by rank.
    pub rows: Vec<LeaderboardRow>,
}

/// Computes cohort statistics and ranks subjects by absolute IQ, highest
/// first. Ties are ordered by subject id.
pub fn rank_entries(entries: Vec<CohortEntry>) -> Result<CohortResult, StatsError> {
    let values: Vec<f64> = entries.iter().map(|e| e.absolute_iq).collect();
    let m = mean(&values)?;
    let s = population_std_dev(&values)?;

    let mut entries = entries;
    entries.sort_by(|a, b| {
        b.absolute_iq
            .total_cmp(&a.absolute_iq)
            .then_with(|| a.subject_id.cmp(&b.subject_id))
    });
    let rows = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| LeaderboardRow {
            rank: i + 1,
            deviation_iq: deviation_iq(e.absolute_iq, m, s),
            subject_id: e.subject_id,
            label: e.label,
            region: e.region,
            absolute_iq: e.absolute_iq,
            flagged: e.flagged,
        })
        .collect();
    Ok(CohortResult {
        mean: m,
        std_dev: s,
        count: values.len(),
        rows,
    })
}

/// Leaderboard over complete sessions scored against `scale`. Rows are
/// labelled with the subject id; callers attach display metadata.
pub fn leaderboard(
    sessions: &[Session],
    scale: &IntelligenceScale,
) -> Result<CohortResult, StatsError> {
    let mut entries = Vec::with_capacity(sessions.len());
    for s in sessions {
        let err = |source| StatsError::Session {
            session_id: s.session_id.clone(),
            source,
        };
        if s.status != SessionStatus::Complete {
            return Err(err(SessionError::Incomplete));
        }
        let f = s.subtest_scores(scale).map_err(err)?;
        let v = ScoreVector::from_subtests(&f, scale)?;
        entries.push(CohortEntry {
            subject_id: s.subject_id.clone(),
            label: s.subject_id.clone(),
            region: None,
            absolute_iq: absolute_iq(&v),
            flagged: s.flagged().next().is_some(),
        });
    }
    rank_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn default_weights() -> Vec<f64> {
        IntelligenceScale::default_scale()
            .subtests
            .iter()
            .map(|s| s.weight.as_f64())
            .collect()
    }

    #[test]
    fn absolute_iq_bounds() {
        let w = default_weights();
        assert!(
            (absolute_iq(&ScoreVector::new(vec![100.0; 15], w.clone()).unwrap()) - 100.0).abs()
                < 1e-12
        );
        assert_eq!(
            absolute_iq(&ScoreVector::new(vec![0.0; 15], w).unwrap()),
            0.0
        );
    }

    #[test]
    fn master_only_scores_fifteen() {
        let scale = IntelligenceScale::default_scale();
        let f = scale
            .subtests
            .iter()
            .map(|s| {
                if s.id.starts_with("master_") {
                    100.0
                } else {
                    0.0
                }
            })
            .collect();
        let v = ScoreVector::new(f, default_weights()).unwrap();
        assert!((absolute_iq(&v) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn score_vector_validation() {
        assert!(matches!(
            ScoreVector::new(vec![1.0], vec![0.5, 0.5]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            ScoreVector::new(vec![101.0], vec![1.0]),
            Err(StatsError::ScoreOutOfRange(_))
        ));
        assert!(matches!(
            ScoreVector::new(vec![1.0], vec![0.9]),
            Err(StatsError::WeightSum(_))
        ));
    }

    #[test]
    fn std_dev_examples() {
        assert_eq!(population_std_dev(&[6.0, 6.0, 6.0]).unwrap(), 0.0);
        assert_eq!(population_std_dev(&[0.0, 100.0]).unwrap(), 50.0);
        assert_eq!(population_std_dev(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn zero_spread_maps_to_hundred() {
        assert_eq!(deviation_iq(42.0, 42.0, 0.0), 100.0);
    }

    fn entry(id: &str, iq: f64) -> CohortEntry {
        CohortEntry {
            subject_id: id.to_string(),
            label: id.to_string(),
            region: None,
            absolute_iq: iq,
            flagged: false,
        }
    }

    #[test]
    fn two_subject_cohort() {
        let r = rank_entries(vec![entry("b", 0.0), entry("a", 100.0)]).unwrap();
        assert_eq!((r.mean, r.std_dev, r.count), (50.0, 50.0, 2));
        assert_eq!(r.rows[0].subject_id, "a");
        assert_eq!(r.rows[0].deviation_iq, 101.0);
        assert_eq!(r.rows[1].deviation_iq, 99.0);
    }

    #[test]
    fn single_subject_cohort() {
        let r = rank_entries(vec![entry("only", 37.5)]).unwrap();
        assert_eq!(r.rows[0].rank, 1);
        assert_eq!(r.rows[0].deviation_iq, 100.0);
    }

    #[test]
    fn ties_are_ordered_by_subject_id() {
        let r = rank_entries(vec![entry("c", 5.0), entry("a", 5.0), entry("b", 9.0)]).unwrap();
        let order: Vec<&str> = r.rows.iter().map(|r| r.subject_id.as_str()).collect();
        assert_eq!(order, ["b", "a", "c"]);
        assert_eq!(r.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn empty_cohort_is_an_error() {
        assert_eq!(rank_entries(vec![]), Err(StatsError::Empty));
    }
}
