//! Machine and plant registry: assets, status lifecycle, maintenance history,
//! fault reports and permit-backed machine work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Guard, Result};
use crate::ids::{FaultId, MachineId, PermitId, RecordId, UserId, WorkId, ZoneId};
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MachineStatus {
    Operational,
    UnderMaintenance,
    OutOfService,
}

impl MachineStatus {
    pub const ALL: [MachineStatus; 3] = [
        MachineStatus::Operational,
        MachineStatus::UnderMaintenance,
        MachineStatus::OutOfService,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Criticality {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manufacture {
    pub maker: String,
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachinePlant {
    pub machine_id: MachineId,
    pub asset_code: String,
    pub manufacture: Manufacture,
    pub classification: String,
    pub criticality: Criticality,
    pub status: MachineStatus,
    pub zone_id: ZoneId,
    pub version: u64,
    /// Maintenance-record ordinal high-water mark when the machine last
    /// entered OUT_OF_SERVICE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_of_service_mark: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewMachine {
    pub asset_code: String,
    pub manufacture: Manufacture,
    pub classification: String,
    pub criticality: Criticality,
    pub zone_id: ZoneId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaintenanceRecord {
    pub record_id: RecordId,
    pub machine_id: MachineId,
    #[serde(with = "serde_millis")]
    pub performed_at: Timestamp,
    pub description: String,
    pub performed_by: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultReport {
    pub fault_id: FaultId,
    pub machine_id: MachineId,
    pub description: String,
    pub reported_by: UserId,
    #[serde(with = "serde_millis")]
    pub reported_at: Timestamp,
    pub status_before: MachineStatus,
}

/// Machine work started under an ACTIVE permit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineWork {
    pub work_id: WorkId,
    pub machine_id: MachineId,
    pub permit_id: PermitId,
    pub started_by: UserId,
    #[serde(with = "serde_millis")]
    pub started_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineFilter {
    #[serde(default)]
    pub status: Option<MachineStatus>,
    #[serde(default)]
    pub zone_id: Option<ZoneId>,
    #[serde(default)]
    pub criticality: Option<Criticality>,
}

impl MachineFilter {
    pub fn matches(&self, m: &MachinePlant) -> bool {
        self.status.map_or(true, |s| m.status == s)
            && self.zone_id.as_ref().map_or(true, |z| &m.zone_id == z)
            && self.criticality.map_or(true, |c| m.criticality == c)
    }
}

impl NewMachine {
    pub fn validate(&self) -> Result<()> {
        if self.asset_code.trim().is_empty() {
            return Err(Error::Validation("asset_code must not be empty".into()));
        }
        if self.manufacture.maker.trim().is_empty() {
            return Err(Error::Validation("manufacture.maker must not be empty".into()));
        }
        Ok(())
    }
}

/// Context the status-change rules need from outside the machine itself.
#[derive(Debug, Clone, Default)]
pub struct StatusContext {
    /// Highest maintenance-record ordinal for this machine.
    pub last_maintenance: Option<u64>,
    /// ACTIVE permits naming this machine.
    pub active_permits: Vec<PermitId>,
    /// Global maintenance-record count (mark for a new OUT_OF_SERVICE entry).
    pub maintenance_count: u64,
}

/// Applies a status change to a copy of `machine`, enforcing the guards.
pub fn change_status(machine: &MachinePlant, to: MachineStatus, ctx: &StatusContext) -> Result<MachinePlant> {
    let from = machine.status;
    if to == MachineStatus::OutOfService && !ctx.active_permits.is_empty() {
        return Err(Error::PermitConflict {
            permits: ctx.active_permits.iter().map(ToString::to_string).collect(),
        });
    }
    if from == MachineStatus::OutOfService
        && to == MachineStatus::Operational
        && machine.criticality == Criticality::High
    {
        let mark = machine.out_of_service_mark.unwrap_or(0);
        if ctx.last_maintenance.map_or(true, |last| last <= mark) {
            return Err(Error::guard(
                Guard::MaintenanceRequired,
                format!("{} needs a maintenance record before returning to service", machine.asset_code),
            ));
        }
    }
    let mut next = machine.clone();
    next.status = to;
    next.version += 1;
    if to == MachineStatus::OutOfService && from != MachineStatus::OutOfService {
        next.out_of_service_mark = Some(ctx.maintenance_count);
    } else if to != MachineStatus::OutOfService {
        next.out_of_service_mark = None;
    }
    Ok(next)
}

/// Fault handling: OPERATIONAL drops to UNDER_MAINTENANCE, anything else is
/// left alone. Returns `None` when the status does not change.
pub fn status_after_fault(status: MachineStatus) -> Option<MachineStatus> {
    match status {
        MachineStatus::Operational => Some(MachineStatus::UnderMaintenance),
        MachineStatus::UnderMaintenance | MachineStatus::OutOfService => None,
    }
}
