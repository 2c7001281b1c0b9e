use serde::{Deserialize, Serialize};

use super::permits::system_move;
use super::{check_version, input_of, Engine};
use crate::access::Action;
use crate::audit::{Actor, EntityRef};
use crate::contracts::{self, is_available, ApprovalStatus, Contractor, Eligibility, NewContractor};
use crate::error::{Error, Guard, Result};
use crate::ids::{ContractorId, FaultId, MachineId, PermitId, RecordId, WorkId};
use crate::permits::{HistoryEvent, PermitState, PermitType};
use crate::registry::{
    change_status, status_after_fault, FaultReport, MachineFilter, MachinePlant, MachineStatus, MachineWork,
    MaintenanceRecord, NewMachine, StatusContext,
};
use crate::store::Effect;
use crate::time::Timestamp;

/// Query for [`Engine::list_contractors`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractorFilter {
    #[serde(default)]
    pub approved: Option<bool>,
    #[serde(default, with = "crate::time::serde_millis::option")]
    pub available_at: Option<Timestamp>,
}

fn machine_entity(id: &MachineId) -> EntityRef {
    EntityRef::new("machine", id)
}

fn contractor_entity(id: &ContractorId) -> EntityRef {
    EntityRef::new("contractor", id)
}

pub const CONTRACTOR_INELIGIBLE: &str = "CONTRACTOR_INELIGIBLE";

impl Engine {
    pub fn register_machine(&self, token: &str, input: NewMachine) -> Result<MachinePlant> {
        self.mutate("machine.register", |tx| {
            let user = self.actor_in(tx, token, Action::MachineRegister)?;
            input.validate()?;
            if !tx.store.zones().contains_zone(&input.zone_id) {
                return Err(Error::not_found("zone", &input.zone_id));
            }
            if tx.store.machine_by_asset_code(&input.asset_code).is_some() {
                return Err(Error::DuplicateAssetCode(input.asset_code.clone()));
            }
            let machine = MachinePlant {
                machine_id: MachineId::from_ordinal(tx.store.machine_count() + 1),
                asset_code: input.asset_code.clone(),
                manufacture: input.manufacture.clone(),
                classification: input.classification.clone(),
                criticality: input.criticality,
                status: MachineStatus::Operational,
                zone_id: input.zone_id.clone(),
                version: 1,
                out_of_service_mark: None,
            };
            tx.emit(
                Actor::User(user.user_id),
                "machine.register",
                machine_entity(&machine.machine_id),
                input_of(&input),
                vec![Effect::Machine(machine.clone())],
            );
            Ok(machine)
        })
    }

    pub fn set_machine_status(
        &self,
        token: &str,
        machine_id: &MachineId,
        new_status: MachineStatus,
        expected_version: u64,
    ) -> Result<MachinePlant> {
        self.mutate("machine.status", |tx| {
            let user = self.actor_in(tx, token, Action::MachineUpdate)?;
            let machine = tx
                .store
                .machine(machine_id)
                .ok_or_else(|| Error::not_found("machine", machine_id))?;
            check_version("machine", machine_id, expected_version, machine.version)?;
            let ctx = StatusContext {
                last_maintenance: tx.store.last_maintenance(machine_id),
                active_permits: tx
                    .store
                    .live_permits()
                    .filter(|p| p.state == PermitState::Active && p.machine_id.as_ref() == Some(machine_id))
                    .map(|p| p.permit_id.clone())
                    .collect(),
                maintenance_count: tx.store.maintenance_count(),
            };
            let next = change_status(machine, new_status, &ctx)?;
            tx.emit(
                Actor::User(user.user_id),
                "machine.status",
                machine_entity(machine_id),
                serde_json::json!({ "new_status": new_status, "expected_version": expected_version }),
                vec![Effect::Machine(next.clone())],
            );
            Ok(next)
        })
    }

    pub fn record_maintenance(&self, token: &str, machine_id: &MachineId, description: &str) -> Result<MaintenanceRecord> {
        self.mutate("machine.maintenance", |tx| {
            let user = self.actor_in(tx, token, Action::MachineUpdate)?;
            tx.store
                .machine(machine_id)
                .ok_or_else(|| Error::not_found("machine", machine_id))?;
            let record = MaintenanceRecord {
                record_id: RecordId::from_ordinal(tx.store.maintenance_count() + 1),
                machine_id: machine_id.clone(),
                performed_at: tx.now,
                description: description.to_owned(),
                performed_by: user.user_id.clone(),
            };
            tx.emit(
                Actor::User(user.user_id),
                "machine.maintenance",
                machine_entity(machine_id),
                serde_json::json!({ "description": description }),
                vec![Effect::Maintenance(record.clone())],
            );
            Ok(record)
        })
    }

    /// Logs a fault; an OPERATIONAL machine drops to UNDER_MAINTENANCE.
    pub fn report_fault(&self, token: &str, machine_id: &MachineId, description: &str) -> Result<MachinePlant> {
        self.mutate("machine.fault_report", |tx| {
            let user = self.actor_in(tx, token, Action::MachineFaultReport)?;
            let machine = tx
                .store
                .machine(machine_id)
                .cloned()
                .ok_or_else(|| Error::not_found("machine", machine_id))?;
            let fault = FaultReport {
                fault_id: FaultId::from_ordinal(tx.store.fault_count() + 1),
                machine_id: machine_id.clone(),
                description: description.to_owned(),
                reported_by: user.user_id.clone(),
                reported_at: tx.now,
                status_before: machine.status,
            };
            let mut effects = vec![Effect::Fault(fault)];
            let mut next = machine;
            if let Some(status) = status_after_fault(next.status) {
                next.status = status;
                next.version += 1;
                effects.push(Effect::Machine(next.clone()));
            }
            tx.emit(
                Actor::User(user.user_id),
                "machine.fault_report",
                machine_entity(machine_id),
                serde_json::json!({ "description": description }),
                effects,
            );
            Ok(next)
        })
    }

    /// Starts work on a machine. Requires an ACTIVE permit naming it, and the
    /// machine must be OPERATIONAL.
    pub fn start_machine_work(&self, token: &str, machine_id: &MachineId, permit_id: &PermitId) -> Result<MachineWork> {
        self.mutate("machine.operate", |tx| {
            let user = self.actor_in(tx, token, Action::MachineOperate)?;
            let machine = tx
                .store
                .machine(machine_id)
                .ok_or_else(|| Error::not_found("machine", machine_id))?;
            let permit = tx
                .store
                .permit(permit_id)
                .ok_or_else(|| Error::not_found("permit", permit_id))?;
            if permit.state != PermitState::Active || permit.machine_id.as_ref() != Some(machine_id) {
                return Err(Error::NoValidPermit {
                    machine: machine_id.to_string(),
                    permit: permit_id.to_string(),
                });
            }
            if machine.status != MachineStatus::Operational {
                return Err(Error::guard(
                    Guard::G2,
                    format!("machine {} is {:?}", machine.asset_code, machine.status),
                ));
            }
            let work = MachineWork {
                work_id: WorkId::from_ordinal(tx.store.work_count() + 1),
                machine_id: machine_id.clone(),
                permit_id: permit_id.clone(),
                started_by: user.user_id.clone(),
                started_at: tx.now,
            };
            tx.emit(
                Actor::User(user.user_id),
                "machine.operate",
                machine_entity(machine_id),
                serde_json::json!({ "permit_id": permit_id }),
                vec![Effect::Work(work.clone())],
            );
            Ok(work)
        })
    }

    /// Machines matching every given predicate, ordered by asset code.
    pub fn list_machines(&self, filter: &MachineFilter) -> Vec<MachinePlant> {
        let mut out: Vec<_> = self.snapshot().machines().filter(|m| filter.matches(m)).cloned().collect();
        out.sort_by(|a, b| a.asset_code.cmp(&b.asset_code));
        out
    }

    pub fn machine(&self, id: &MachineId) -> Result<MachinePlant> {
        self.snapshot()
            .machine(id)
            .cloned()
            .ok_or_else(|| Error::not_found("machine", id))
    }

    pub fn maintenance_history(&self, id: &MachineId) -> Result<Vec<MaintenanceRecord>> {
        let store = self.snapshot();
        store.machine(id).ok_or_else(|| Error::not_found("machine", id))?;
        Ok(store.maintenance_records().filter(|r| &r.machine_id == id).cloned().collect())
    }

    pub fn register_contractor(&self, token: &str, input: NewContractor) -> Result<Contractor> {
        self.mutate("contract.register", |tx| {
            let user = self.actor_in(tx, token, Action::ContractRegister)?;
            input.validate()?;
            if tx.store.contractor_by_vendor_code(&input.vendor_code).is_some() {
                return Err(Error::DuplicateVendorCode(input.vendor_code.clone()));
            }
            let contractor = Contractor {
                contractor_id: ContractorId::from_ordinal(tx.store.contractor_count() + 1),
                vendor_code: input.vendor_code.clone(),
                name: input.name.clone(),
                work_categories: input.work_categories.clone(),
                certification: input.certification.clone(),
                safety_rating: input.safety_rating,
                approval_status: ApprovalStatus::Pending,
                workforce_size: input.workforce_size,
                registered_at: tx.now,
                version: 1,
            };
            tx.emit(
                Actor::User(user.user_id),
                "contract.register",
                contractor_entity(&contractor.contractor_id),
                input_of(&input),
                vec![Effect::Contractor(contractor.clone())],
            );
            Ok(contractor)
        })
    }

    /// Changes approval status. Leaving APPROVED rejects the contractor's
    /// SUBMITTED permits and suspends its ACTIVE ones, as SYSTEM, in the
    /// same commit.
    pub fn set_approval(
        &self,
        token: &str,
        contractor_id: &ContractorId,
        new_status: ApprovalStatus,
        expected_version: u64,
    ) -> Result<Contractor> {
        self.mutate("contract.approve", |tx| {
            let user = self.actor_in(tx, token, Action::ContractApprove)?;
            let current = tx
                .store
                .contractor(contractor_id)
                .cloned()
                .ok_or_else(|| Error::not_found("contractor", contractor_id))?;
            if !current.approval_status.can_become(new_status) {
                return Err(Error::IllegalTransition {
                    from: format!("{:?}", current.approval_status).to_uppercase(),
                    event: format!("{new_status:?}").to_uppercase(),
                });
            }
            check_version("contractor", contractor_id, expected_version, current.version)?;
            let mut next = current.clone();
            next.approval_status = new_status;
            next.version += 1;
            let action = match new_status {
                ApprovalStatus::Approved => "contract.approve",
                ApprovalStatus::Suspended => "contract.suspend",
                ApprovalStatus::Revoked => "contract.revoke",
                ApprovalStatus::Pending => "contract.update",
            };
            tx.emit(
                Actor::User(user.user_id),
                action,
                contractor_entity(contractor_id),
                serde_json::json!({ "new_status": new_status, "expected_version": expected_version }),
                vec![Effect::Contractor(next.clone())],
            );
            if current.approval_status == ApprovalStatus::Approved {
                let affected: Vec<_> = tx
                    .store
                    .permits()
                    .filter(|p| p.contractor_id.as_ref() == Some(contractor_id))
                    .filter(|p| matches!(p.state, PermitState::Submitted | PermitState::Active))
                    .cloned()
                    .collect();
                for permit in affected {
                    let (to, event, action) = if permit.state == PermitState::Submitted {
                        (PermitState::Rejected, HistoryEvent::Reject, "permit.reject")
                    } else {
                        (PermitState::Suspended, HistoryEvent::Suspend, "permit.suspend")
                    };
                    system_move(tx, &permit, to, event, action, CONTRACTOR_INELIGIBLE.into());
                }
            }
            Ok(next)
        })
    }

    pub fn contractor(&self, id: &ContractorId) -> Result<Contractor> {
        self.snapshot()
            .contractor(id)
            .cloned()
            .ok_or_else(|| Error::not_found("contractor", id))
    }

    pub fn list_contractors(&self, filter: &ContractorFilter) -> Vec<Contractor> {
        self.snapshot()
            .contractors()
            .filter(|c| {
                filter
                    .approved
                    .map_or(true, |want| (c.approval_status == ApprovalStatus::Approved) == want)
            })
            .filter(|c| filter.available_at.map_or(true, |at| is_available(c, at)))
            .cloned()
            .collect()
    }

    pub fn check_eligibility(&self, id: &ContractorId, permit_type: PermitType, at: Timestamp) -> Result<Eligibility> {
        let store = self.snapshot();
        let c = store.contractor(id).ok_or_else(|| Error::not_found("contractor", id))?;
        Ok(contracts::check_eligibility(c, permit_type, at, self.config.min_safety_rating))
    }

    /// APPROVED contractors whose certificate covers `at`.
    pub fn available_count(&self, at: Timestamp) -> u64 {
        self.snapshot().contractors().filter(|c| is_available(c, at)).count() as u64
    }
}
