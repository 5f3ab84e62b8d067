//! Test metrics and version comparison tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeOutcome, EpisodeRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub success_rate: f64,
    pub collision_rate: f64,
    /// Mean arrival time of successful episodes; absent when none succeeded.
    pub avg_nav_time: Option<f64>,
    /// Mean cumulative reward over all episodes.
    pub total_reward: f64,
    pub episode_count: usize,
}

impl MetricsReport {
    pub fn timeout_rate(&self) -> f64 {
        1.0 - self.success_rate - self.collision_rate
    }
}

/// Sum that does not depend on the order of `values`.
fn ordered_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

pub fn aggregate(records: &[EpisodeRecord]) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = records.len();
    let count = |o| records.iter().filter(|r| r.outcome() == o).count();
    let successes = count(EpisodeOutcome::ReachedGoal);
    let collisions = count(EpisodeOutcome::Collision);
    let times: Vec<f64> = records.iter().filter_map(|r| r.nav_time()).collect();
    let avg_nav_time = (!times.is_empty()).then(|| {
        let k = times.len() as f64;
        ordered_sum(times) / k
    });
    let total_reward = ordered_sum(records.iter().map(|r| r.cumulative_reward()).collect()) / n as f64;
    Ok(MetricsReport {
        success_rate: successes as f64 / n as f64,
        collision_rate: collisions as f64 / n as f64,
        avg_nav_time,
        total_reward,
        episode_count: n,
    })
}

/// One labelled row per report, in insertion order. A label may repeat to
/// hold several runs of the same version.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<(String, MetricsReport)>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    version: String,
    success_rate: f64,
    collision_rate: f64,
    nav_time: Option<f64>,
    total_reward: f64,
    episodes: usize,
}

pub fn compare_versions<I, S>(reports: I) -> ComparisonTable
where
    I: IntoIterator<Item = (S, MetricsReport)>,
    S: Into<String>,
{
    ComparisonTable {
        rows: reports.into_iter().map(|(s, r)| (s.into(), r)).collect(),
    }
}

impl ComparisonTable {
    /// Aligned text rendering with the usual two/four decimal places.
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(v, _)| v.len()).max().unwrap_or(0).max(7);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>9}  {:>8}  {:>12}",
            "version", "success", "collision", "nav time", "total reward"
        );
        for (v, r) in &self.rows {
            let nav = r.avg_nav_time.map_or_else(|| "-".to_string(), |t| format!("{t:.2}"));
            let _ = writeln!(
                out,
                "{v:<width$}  {:>7.2}  {:>9.2}  {nav:>8}  {:>12.4}",
                r.success_rate, r.collision_rate, r.total_reward
            );
        }
        out
    }

    /// CSV with header `version,success_rate,collision_rate,nav_time,total_reward,episodes`;
    /// floats are written in shortest round-trip form, a missing nav time as an empty field.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (v, r) in &self.rows {
            w.serialize(CsvRow {
                version: v.clone(),
                success_rate: r.success_rate,
                collision_rate: r.collision_rate,
                nav_time: r.avg_nav_time,
                total_reward: r.total_reward,
                episodes: r.episode_count,
            })
            .map_err(|e| Error::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, row) in csv::Reader::from_reader(text.as_bytes()).deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::MalformedLog {
                line: i + 2,
                reason: e.to_string(),
            })?;
            rows.push((
                row.version,
                MetricsReport {
                    success_rate: row.success_rate,
                    collision_rate: row.collision_rate,
                    avg_nav_time: row.nav_time,
                    total_reward: row.total_reward,
                    episode_count: row.episodes,
                },
            ));
        }
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}
