//! Leaderboard reports over stored sessions and over the published table.

use std::collections::BTreeMap;
use std::str::FromStr;

use aiq_core::{leaderboard, CohortResult, IntelligenceScale, Session, SessionStatus, StatsError};
use serde::Serialize;

use crate::golden::GoldenComparison;
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (table, csv, json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortReport {
    pub cohort: String,
    /// `None` while the cohort has no complete session.
    pub result: Option<CohortResult>,
    /// Sessions left out: not complete, or superseded by a later complete
    /// session of the same subject.
    pub excluded: Vec<String>,
}

/// Builds the leaderboard of `cohort` from its sessions, using each
/// subject's latest complete session. Registry metadata, when given,
/// supplies labels and regions.
pub fn cohort_report(
    cohort: &str,
    sessions: &[Session],
    scale: &IntelligenceScale,
    registry: Option<&Registry>,
) -> Result<CohortReport, StatsError> {
    let mut latest: BTreeMap<&str, &Session> = BTreeMap::new();
    let mut excluded = Vec::new();
    for s in sessions.iter().filter(|s| s.cohort == cohort) {
        if s.status != SessionStatus::Complete {
            excluded.push(s.session_id.clone());
            continue;
        }
        let key = (s.started_at_ms, &s.session_id);
        match latest.get(s.subject_id.as_str()) {
            Some(prev) if (prev.started_at_ms, &prev.session_id) > key => {
                excluded.push(s.session_id.clone())
            }
            Some(prev) => {
                excluded.push(prev.session_id.clone());
                latest.insert(&s.subject_id, s);
            }
            None => {
                latest.insert(&s.subject_id, s);
            }
        }
    }
    excluded.sort();
    if latest.is_empty() {
        return Ok(CohortReport {
            cohort: cohort.to_string(),
            result: None,
            excluded,
        });
    }
    let chosen: Vec<Session> = latest.into_values().cloned().collect();
    let mut result = leaderboard(&chosen, scale)?;
    if let Some(reg) = registry {
        for row in &mut result.rows {
            if let Some(entry) = reg.get(&row.subject_id) {
                let d = &entry.descriptor;
                row.label = d.label.clone().unwrap_or_else(|| d.display_name.clone());
                row.region = d.region.clone();
            }
        }
    }
    Ok(CohortReport {
        cohort: cohort.to_string(),
        result: Some(result),
        excluded,
    })
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 is utf-8")
}

fn render(header: &[&str], rows: &[Vec<String>], format: Format, json: impl Serialize) -> String {
    match format {
        Format::Table => render_table(header, rows),
        Format::Csv => render_csv(header, rows),
        Format::Json => serde_json::to_string_pretty(&json).expect("reports serialize") + "\n",
    }
}

pub fn render_cohort(report: &CohortReport, format: Format) -> String {
    let header = [
        "rank",
        "subject",
        "label",
        "region",
        "absolute_iq",
        "deviation_iq",
        "flagged",
    ];
    let rows: Vec<Vec<String>> = report
        .result
        .iter()
        .flat_map(|r| &r.rows)
        .map(|r| {
            vec![
                r.rank.to_string(),
                r.subject_id.clone(),
                r.label.clone(),
                r.region.clone().unwrap_or_default(),
                format!("{:.2}", r.absolute_iq),
                format!("{:.2}", r.deviation_iq),
                if r.flagged {
                    "yes".into()
                } else {
                    String::new()
                },
            ]
        })
        .collect();
    let mut out = render(&header, &rows, format, report);
    if format == Format::Table {
        match &report.result {
            Some(r) => out.push_str(&format!(
                "M={} mean={:.4} S={:.4}\n",
                r.count, r.mean, r.std_dev
            )),
            None => out.push_str(&format!(
                "cohort {} has no complete sessions\n",
                report.cohort
            )),
        }
    }
    out
}

pub fn render_golden(cmp: &GoldenComparison, format: Format) -> String {
    let header = [
        "rank",
        "label",
        "place",
        "absolute_iq",
        "published_iq_d",
        "recomputed_iq_d",
        "delta",
        "match",
    ];
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.published_rank.to_string(),
                r.label.clone(),
                r.place.clone(),
                r.absolute_iq.to_string(),
                format!("{:.2}", r.published),
                format!("{:.2}", r.recomputed),
                format!("{:+.2}", r.delta),
                if r.matches { "yes" } else { "no" }.into(),
            ]
        })
        .collect();
    let mut out = render(&header, &rows, format, cmp);
    if format == Format::Table {
        out.push_str(&format!(
            "M={} mean={:.4} S={:.4} matched={}/{} (±{})\n",
            cmp.count,
            cmp.mean,
            cmp.std_dev,
            cmp.matched,
            cmp.rows.len(),
            cmp.tolerance
        ));
    }
    out
}
