//! Per-run and per-campaign aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::IterationRecord;
use crate::orchestrator::TerminationStatus;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot summarize an empty trace")]
    EmptyTrace,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComfortCounts {
    pub accel: u32,
    pub jerk: u32,
    pub accel_exempt: u32,
    pub jerk_exempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario_id: String,
    pub seed: u64,
    pub termination: TerminationStatus,
    pub ticks: u64,
    pub any_unsafe_flag: bool,
    pub unsafe_tick_count: u32,
    pub warning_tick_count: u32,
    pub collision: bool,
    /// Present iff the run terminated `Cleared`.
    pub clearance_time_s: Option<f64>,
    pub clearance_exceeded: bool,
    pub max_abs_accel: f64,
    /// Over all consecutive tick pairs.
    pub max_abs_jerk: f64,
    /// Over pairs where neither tick was under recovery.
    pub max_abs_jerk_non_exempt: f64,
    pub comfort_violations: ComfortCounts,
    pub faults_injected: BTreeMap<String, u32>,
    pub recovery_activations: u32,
    pub recovery_successes: u32,
}

/// `round(1000 k / n) / 10`, zero for an empty denominator.
pub fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (1000.0 * k as f64 / n as f64).round() / 10.0
    }
}

pub fn summarize_run(
    scenario_id: &str,
    seed: u64,
    records: &[IterationRecord],
    termination: TerminationStatus,
) -> Result<RunSummary, MetricsError> {
    let last = records.last().ok_or(MetricsError::EmptyTrace)?;
    let mut s = RunSummary {
        scenario_id: scenario_id.to_string(),
        seed,
        termination,
        ticks: records.len() as u64,
        any_unsafe_flag: false,
        unsafe_tick_count: 0,
        warning_tick_count: 0,
        collision: records.iter().any(|r| r.collision),
        clearance_time_s: (termination == TerminationStatus::Cleared).then_some(last.sim_time_s),
        clearance_exceeded: records.iter().any(|r| r.perf.clearance_exceeded),
        max_abs_accel: 0.0,
        max_abs_jerk: 0.0,
        max_abs_jerk_non_exempt: 0.0,
        comfort_violations: ComfortCounts::default(),
        faults_injected: BTreeMap::new(),
        recovery_activations: 0,
        recovery_successes: 0,
    };
    for r in records {
        match r.verdict_level {
            Some(crate::state::VerdictLevel::Unsafe) => s.unsafe_tick_count += 1,
            Some(crate::state::VerdictLevel::Warning) => s.warning_tick_count += 1,
            _ => {}
        }
        s.max_abs_accel = s.max_abs_accel.max(r.ego_accel.abs());
        let p = &r.perf;
        let c = &mut s.comfort_violations;
        if p.accel_violation {
            if p.accel_exempt {
                c.accel_exempt += 1;
            } else {
                c.accel += 1;
            }
        }
        if p.jerk_violation {
            if p.jerk_exempt {
                c.jerk_exempt += 1;
            } else {
                c.jerk += 1;
            }
        }
        if let Some(kind) = &r.injected_fault {
            *s.faults_injected.entry(kind.clone()).or_insert(0) += 1;
        }
    }
    s.any_unsafe_flag = s.unsafe_tick_count > 0;
    for w in records.windows(2) {
        let dt = w[1].sim_time_s - w[0].sim_time_s;
        if dt <= 0.0 {
            continue;
        }
        let j = ((w[1].ego_accel - w[0].ego_accel) / dt).abs();
        s.max_abs_jerk = s.max_abs_jerk.max(j);
        if !w[0].recovery_active && !w[1].recovery_active {
            s.max_abs_jerk_non_exempt = s.max_abs_jerk_non_exempt.max(j);
        }
    }
    // recovery episodes: maximal runs of recovery_active ticks; an episode
    // succeeds if no collision occurs before the next one starts
    let starts: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].recovery_active && (i == 0 || !records[i - 1].recovery_active))
        .collect();
    s.recovery_activations = starts.len() as u32;
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(records.len());
        if !records[start..end].iter().any(|r| r.collision) {
            s.recovery_successes += 1;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario: String,
    /// Completed runs (failed runs are counted separately).
    pub runs: usize,
    pub failed: usize,
    pub unsafe_flagged: usize,
    pub collided: usize,
    pub pct_unsafe_flag: f64,
    pub pct_collision: f64,
    pub cleared: usize,
    pub clearance_mean_s: Option<f64>,
    pub clearance_std_s: Option<f64>,
    pub gridlocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRow {
    pub runs: usize,
    pub failed: usize,
    /// Mean of the per-scenario percentages, rounded to one decimal.
    pub pct_unsafe_flag: f64,
    pub pct_collision: f64,
    /// Mean of the per-scenario clearance means.
    pub clearance_mean_s: Option<f64>,
    pub gridlocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub rows: Vec<ScenarioRow>,
    pub overall: Option<OverallRow>,
}

impl CampaignSummary {
    pub fn row(&self, scenario: &str) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.scenario == scenario)
    }
}

/// Identifies a run that aborted before producing a summary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailedRun {
    pub scenario_id: String,
    pub seed: u64,
    pub error: String,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(std))
}

/// Groups by scenario id (rows sorted by id); within a scenario runs are
/// folded in seed order so the result never depends on completion order.
pub fn summarize_campaign(runs: &[RunSummary], failed: &[FailedRun]) -> CampaignSummary {
    let mut groups: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        groups.entry(r.scenario_id.as_str()).or_default().push(r);
    }
    for f in failed {
        groups.entry(f.scenario_id.as_str()).or_default();
    }
    let rows: Vec<ScenarioRow> = groups
        .into_iter()
        .map(|(id, mut rs)| {
            rs.sort_by_key(|r| r.seed);
            let n = rs.len();
            let flagged = rs.iter().filter(|r| r.any_unsafe_flag).count();
            let collided = rs.iter().filter(|r| r.collision).count();
            let clear: Vec<f64> = rs.iter().filter_map(|r| r.clearance_time_s).collect();
            let (mean, std) = mean_std(&clear);
            ScenarioRow {
                scenario: id.to_string(),
                runs: n,
                failed: failed.iter().filter(|f| f.scenario_id == id).count(),
                unsafe_flagged: flagged,
                collided,
                pct_unsafe_flag: percent(flagged, n),
                pct_collision: percent(collided, n),
                cleared: clear.len(),
                clearance_mean_s: mean,
                clearance_std_s: std,
                gridlocks: rs
                    .iter()
                    .filter(|r| r.termination == TerminationStatus::Timeout)
                    .count(),
            }
        })
        .collect();
    let overall = (!rows.is_empty()).then(|| {
        let k = rows.len() as f64;
        let avg = |f: fn(&ScenarioRow) -> f64| ((rows.iter().map(f).sum::<f64>() / k) * 10.0).round() / 10.0;
        let means: Vec<f64> = rows.iter().filter_map(|r| r.clearance_mean_s).collect();
        OverallRow {
            runs: rows.iter().map(|r| r.runs).sum(),
            failed: rows.iter().map(|r| r.failed).sum(),
            pct_unsafe_flag: avg(|r| r.pct_unsafe_flag),
            pct_collision: avg(|r| r.pct_collision),
            clearance_mean_s: mean_std(&means).0,
            gridlocks: rows.iter().map(|r| r.gridlocks).sum(),
        }
    });
    CampaignSummary { rows, overall }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_law() {
        assert_eq!(percent(13, 15), 86.7);
        assert_eq!(percent(1, 15), 6.7);
        assert_eq!(percent(5, 15), 33.3);
        assert_eq!(percent(2, 15), 13.3);
        assert_eq!(percent(0, 15), 0.0);
        assert_eq!(percent(15, 15), 100.0);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[2.0, 4.0]);
        assert_eq!(m, Some(3.0));
        assert!((s.unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[5.0]), (Some(5.0), Some(0.0)));
    }
}
