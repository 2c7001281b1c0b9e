//! Pipeline-duration analytics and incident statistics.
//!
//! Stage boundaries come from audit actions:
//!
//! | stage                     | start               | end                    |
//! |---------------------------|---------------------|------------------------|
//! | PERMIT_APPROVAL           | `permit.submit`     | `permit.approve`       |
//! | MACHINE_ALLOCATION        | `permit.approve`    | `permit.activate` (machine-bearing permits) |
//! | CONTRACTOR_VERIFICATION   | `contract.register` | `contract.approve`     |
//! | TASK_EXECUTION_MONITORING | `permit.activate`   | `permit.close`         |
//! | INCIDENT_LOGGING          | `incident.report`   | `incident.investigate` |

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::audit::AuditEntry;
use crate::error::{Error, Result};
use crate::incidents::{Incident, IncidentCategory};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage {
    PermitApproval,
    MachineAllocation,
    ContractorVerification,
    TaskExecutionMonitoring,
    IncidentLogging,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::PermitApproval,
        Stage::MachineAllocation,
        Stage::ContractorVerification,
        Stage::TaskExecutionMonitoring,
        Stage::IncidentLogging,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::PermitApproval => "PERMIT_APPROVAL",
            Stage::MachineAllocation => "MACHINE_ALLOCATION",
            Stage::ContractorVerification => "CONTRACTOR_VERIFICATION",
            Stage::TaskExecutionMonitoring => "TASK_EXECUTION_MONITORING",
            Stage::IncidentLogging => "INCIDENT_LOGGING",
        }
    }

    /// Start and end audit actions.
    pub fn boundaries(self) -> (&'static str, &'static str) {
        match self {
            Stage::PermitApproval => ("permit.submit", "permit.approve"),
            Stage::MachineAllocation => ("permit.approve", "permit.activate"),
            Stage::ContractorVerification => ("contract.register", "contract.approve"),
            Stage::TaskExecutionMonitoring => ("permit.activate", "permit.close"),
            Stage::IncidentLogging => ("incident.report", "incident.investigate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    /// Minutes.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageComparison {
    pub manual: f64,
    pub digital: f64,
    pub reduction_pct: f64,
}

impl StageComparison {
    fn new(manual: f64, digital: f64) -> Self {
        Self {
            manual,
            digital,
            reduction_pct: reduction_pct(manual, digital),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub per_stage: BTreeMap<Stage, StageComparison>,
    pub cumulative: StageComparison,
}

/// `100 * (manual - digital) / manual`, or 0 for a zero baseline.
pub fn reduction_pct(manual: f64, digital: f64) -> f64 {
    if manual > 0.0 {
        100.0 * (manual - digital) / manual
    } else {
        0.0
    }
}

fn ms_to_minutes(ms: i64) -> f64 {
    ms as f64 / 60_000.0
}

/// The permit's machine link as recorded in the entry's effect.
fn names_machine(entry: &AuditEntry) -> bool {
    entry.payload["effects"]
        .as_array()
        .into_iter()
        .flatten()
        .any(|e| e["kind"] == "permit" && !e["state"]["machine_id"].is_null())
}

/// Total minutes per stage over lifecycles that both start and end inside
/// `[from, to]`. Each entity contributes its first start and the first end
/// that follows it.
pub fn stage_durations<'a>(
    log: impl IntoIterator<Item = &'a AuditEntry>,
    from: Timestamp,
    to: Timestamp,
) -> Result<BTreeMap<Stage, f64>> {
    if from > to {
        return Err(Error::InvalidRange);
    }
    let in_window = |t: Timestamp| from <= t && t <= to;
    let mut starts: HashMap<(Stage, &str), Timestamp> = HashMap::new();
    let mut done: HashSet<(Stage, &str)> = HashSet::new();
    let mut total_ms: BTreeMap<Stage, i64> = Stage::ALL.iter().map(|s| (*s, 0)).collect();
    for entry in log {
        let id = entry.entity.id.as_str();
        for stage in Stage::ALL {
            let (start_action, end_action) = stage.boundaries();
            if entry.action == start_action {
                starts.entry((stage, id)).or_insert(entry.at);
            }
            if entry.action != end_action {
                continue;
            }
            if stage == Stage::MachineAllocation && !names_machine(entry) {
                continue;
            }
            if let Some(&start) = starts.get(&(stage, id)) {
                if done.insert((stage, id)) && in_window(start) && in_window(entry.at) {
                    *total_ms.get_mut(&stage).expect("every stage present") += (entry.at - start).num_milliseconds();
                }
            }
        }
    }
    Ok(total_ms.into_iter().map(|(s, ms)| (s, ms_to_minutes(ms))).collect())
}

fn timing_map(timings: &[StageTiming], label: &str) -> Result<BTreeMap<Stage, f64>> {
    let mut map = BTreeMap::new();
    for t in timings {
        if !t.duration.is_finite() || t.duration < 0.0 {
            return Err(Error::Validation(format!(
                "{label} duration for {} must be finite and >= 0",
                t.stage.name()
            )));
        }
        if map.insert(t.stage, t.duration).is_some() {
            return Err(Error::Validation(format!("{label} lists {} twice", t.stage.name())));
        }
    }
    Ok(map)
}

pub fn compare_pipelines(manual: &[StageTiming], digital: &[StageTiming]) -> Result<PipelineReport> {
    let manual = timing_map(manual, "manual")?;
    let digital = timing_map(digital, "digital")?;
    if !manual.keys().eq(digital.keys()) {
        return Err(Error::StageMismatch);
    }
    if let Some((stage, _)) = manual.iter().find(|(_, m)| **m <= 0.0) {
        return Err(Error::ZeroBaseline(stage.name().into()));
    }
    let per_stage: BTreeMap<Stage, StageComparison> = manual
        .iter()
        .map(|(stage, m)| (*stage, StageComparison::new(*m, digital[stage])))
        .collect();
    let cumulative = StageComparison::new(
        per_stage.values().map(|c| c.manual).sum(),
        per_stage.values().map(|c| c.digital).sum(),
    );
    Ok(PipelineReport {
        per_stage,
        cumulative,
    })
}

impl PipelineReport {
    /// `stage,manual_min,digital_min,reduction_pct`, one row per stage.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,manual_min,digital_min,reduction_pct\n");
        for (stage, c) in &self.per_stage {
            let _ = writeln!(out, "{},{},{},{}", stage.name(), c.manual, c.digital, c.reduction_pct);
        }
        out
    }
}

/// Percentage of incidents per category; only categories that occur appear.
pub fn incident_stats(incidents: &[Incident]) -> BTreeMap<IncidentCategory, f64> {
    let mut counts: BTreeMap<IncidentCategory, u64> = BTreeMap::new();
    for incident in incidents {
        *counts.entry(incident.category).or_default() += 1;
    }
    category_percentages(&counts)
}

pub fn category_percentages(counts: &BTreeMap<IncidentCategory, u64>) -> BTreeMap<IncidentCategory, f64> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    counts
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(c, n)| (*c, 100.0 * *n as f64 / total as f64))
        .collect()
}
