//! In-memory entity state.
//!
//! Maps are persistent (`im`), so cloning a [`Store`] is O(1) and readers
//! hold immutable snapshots while the writer builds the next version.
//! Secondary indices are derived from the maps and rebuilt on every upsert.

use std::collections::BTreeMap;
use std::sync::Arc;

use im::{OrdMap, OrdSet};
use serde::{Deserialize, Serialize};

use crate::access::User;
use crate::contracts::Contractor;
use crate::ids::{ContractorId, FaultId, IncidentId, MachineId, PermitId, RecordId, UserId, WorkId};
use crate::incidents::Incident;
use crate::permits::Permit;
use crate::registry::{FaultReport, MachinePlant, MachineWork, MaintenanceRecord};
use crate::zones::{PermitView, ZoneLayout};

/// One entity's post-state, as carried in a journal payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Effect {
    User(User),
    Zones(ZoneLayout),
    Machine(MachinePlant),
    Maintenance(MaintenanceRecord),
    Fault(FaultReport),
    Work(MachineWork),
    Contractor(Contractor),
    Permit(Permit),
    Incident(Incident),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Store {
    users: OrdMap<UserId, User>,
    zones: Arc<ZoneLayout>,
    machines: OrdMap<MachineId, MachinePlant>,
    maintenance: OrdMap<RecordId, MaintenanceRecord>,
    faults: OrdMap<FaultId, FaultReport>,
    work: OrdMap<WorkId, MachineWork>,
    contractors: OrdMap<ContractorId, Contractor>,
    permits: OrdMap<PermitId, Permit>,
    incidents: OrdMap<IncidentId, Incident>,

    live_permits: OrdSet<PermitId>,
    open_by_deadline: OrdSet<(i64, PermitId)>,
    permits_by_user: OrdMap<UserId, OrdSet<PermitId>>,
    incidents_by_permit: OrdMap<PermitId, OrdSet<IncidentId>>,
    last_maintenance: OrdMap<MachineId, u64>,
    asset_codes: OrdMap<String, MachineId>,
    vendor_codes: OrdMap<String, ContractorId>,
}

/// Plain serialized form used by snapshots.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Entities {
    pub users: Vec<User>,
    pub zones: ZoneLayout,
    pub machines: Vec<MachinePlant>,
    pub maintenance: Vec<MaintenanceRecord>,
    pub faults: Vec<FaultReport>,
    pub work: Vec<MachineWork>,
    pub contractors: Vec<Contractor>,
    pub permits: Vec<Permit>,
    pub incidents: Vec<Incident>,
}

impl Store {
    pub fn apply(&mut self, effect: Effect) {
        match effect {
            Effect::User(u) => {
                self.users.insert(u.user_id.clone(), u);
            }
            Effect::Zones(layout) => self.zones = Arc::new(layout),
            Effect::Machine(m) => {
                self.asset_codes.insert(m.asset_code.clone(), m.machine_id.clone());
                self.machines.insert(m.machine_id.clone(), m);
            }
            Effect::Maintenance(r) => {
                if let Some(ordinal) = r.record_id.ordinal() {
                    let entry = self.last_maintenance.entry(r.machine_id.clone()).or_insert(0);
                    *entry = (*entry).max(ordinal);
                }
                self.maintenance.insert(r.record_id.clone(), r);
            }
            Effect::Fault(f) => {
                self.faults.insert(f.fault_id.clone(), f);
            }
            Effect::Work(w) => {
                self.work.insert(w.work_id.clone(), w);
            }
            Effect::Contractor(c) => {
                self.vendor_codes.insert(c.vendor_code.clone(), c.contractor_id.clone());
                self.contractors.insert(c.contractor_id.clone(), c);
            }
            Effect::Permit(p) => self.upsert_permit(p),
            Effect::Incident(i) => {
                if let Some(old) = self.incidents.get(&i.incident_id) {
                    if let Some(pid) = &old.permit_id {
                        if let Some(set) = self.incidents_by_permit.get_mut(pid) {
                            set.remove(&i.incident_id);
                        }
                    }
                }
                if let Some(pid) = &i.permit_id {
                    self.incidents_by_permit
                        .entry(pid.clone())
                        .or_default()
                        .insert(i.incident_id.clone());
                }
                self.incidents.insert(i.incident_id.clone(), i);
            }
        }
    }

    fn upsert_permit(&mut self, p: Permit) {
        let id = p.permit_id.clone();
        if let Some(old) = self.permits.get(&id) {
            self.live_permits.remove(&id);
            self.open_by_deadline.remove(&(old.valid_to.timestamp_millis(), id.clone()));
        }
        if p.state.is_live() {
            self.live_permits.insert(id.clone());
        }
        if !p.state.is_terminal() {
            self.open_by_deadline.insert((p.valid_to.timestamp_millis(), id.clone()));
        }
        self.permits_by_user
            .entry(p.requester_id.clone())
            .or_default()
            .insert(id.clone());
        self.permits.insert(id, p);
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn user(&self, id: &UserId) -> Option<&User> {
        self.users.get(id)
    }

    pub fn user_count(&self) -> u64 {
        self.users.len() as u64
    }

    pub fn zones(&self) -> &ZoneLayout {
        &self.zones
    }

    pub fn machine(&self, id: &MachineId) -> Option<&MachinePlant> {
        self.machines.get(id)
    }

    pub fn machines(&self) -> impl Iterator<Item = &MachinePlant> {
        self.machines.values()
    }

    pub fn machine_count(&self) -> u64 {
        self.machines.len() as u64
    }

    pub fn machine_by_asset_code(&self, code: &str) -> Option<&MachinePlant> {
        self.asset_codes.get(code).and_then(|id| self.machines.get(id))
    }

    pub fn maintenance_records(&self) -> impl Iterator<Item = &MaintenanceRecord> {
        self.maintenance.values()
    }

    pub fn maintenance_count(&self) -> u64 {
        self.maintenance.len() as u64
    }

    pub fn last_maintenance(&self, machine: &MachineId) -> Option<u64> {
        self.last_maintenance.get(machine).copied()
    }

    pub fn faults(&self) -> impl Iterator<Item = &FaultReport> {
        self.faults.values()
    }

    pub fn fault_count(&self) -> u64 {
        self.faults.len() as u64
    }

    pub fn machine_work(&self) -> impl Iterator<Item = &MachineWork> {
        self.work.values()
    }

    pub fn work_count(&self) -> u64 {
        self.work.len() as u64
    }

    pub fn contractor(&self, id: &ContractorId) -> Option<&Contractor> {
        self.contractors.get(id)
    }

    pub fn contractors(&self) -> impl Iterator<Item = &Contractor> {
        self.contractors.values()
    }

    pub fn contractor_count(&self) -> u64 {
        self.contractors.len() as u64
    }

    pub fn contractor_by_vendor_code(&self, code: &str) -> Option<&Contractor> {
        self.vendor_codes.get(code).and_then(|id| self.contractors.get(id))
    }

    pub fn permit(&self, id: &PermitId) -> Option<&Permit> {
        self.permits.get(id)
    }

    pub fn permits(&self) -> impl Iterator<Item = &Permit> {
        self.permits.values()
    }

    pub fn permit_count(&self) -> u64 {
        self.permits.len() as u64
    }

    /// APPROVED and ACTIVE permits.
    pub fn live_permits(&self) -> impl Iterator<Item = &Permit> {
        self.live_permits.iter().filter_map(|id| self.permits.get(id))
    }

    pub fn live_views(&self) -> Vec<PermitView> {
        self.live_permits().map(view_of).collect()
    }

    /// Non-terminal permits whose `valid_to` is strictly before `cutoff_ms`.
    pub fn overdue_permits(&self, cutoff_ms: i64) -> Vec<PermitId> {
        self.open_by_deadline
            .iter()
            .take_while(|(deadline, _)| *deadline < cutoff_ms)
            .map(|(_, id)| id.clone())
            .collect()
    }

    pub fn permits_by_user(&self, user: &UserId) -> Vec<&Permit> {
        self.permits_by_user
            .get(user)
            .into_iter()
            .flatten()
            .filter_map(|id| self.permits.get(id))
            .collect()
    }

    pub fn incident(&self, id: &IncidentId) -> Option<&Incident> {
        self.incidents.get(id)
    }

    pub fn incidents(&self) -> impl Iterator<Item = &Incident> {
        self.incidents.values()
    }

    pub fn incident_count(&self) -> u64 {
        self.incidents.len() as u64
    }

    pub fn incidents_for_permit(&self, permit: &PermitId) -> Vec<&Incident> {
        self.incidents_by_permit
            .get(permit)
            .into_iter()
            .flatten()
            .filter_map(|id| self.incidents.get(id))
            .collect()
    }

    pub fn counts(&self) -> BTreeMap<String, u64> {
        [
            ("user", self.users.len()),
            ("zone", self.zones.zones().count()),
            ("machine", self.machines.len()),
            ("maintenance", self.maintenance.len()),
            ("fault", self.faults.len()),
            ("work", self.work.len()),
            ("contractor", self.contractors.len()),
            ("permit", self.permits.len()),
            ("incident", self.incidents.len()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v as u64))
        .collect()
    }

    pub fn to_entities(&self) -> Entities {
        Entities {
            users: self.users.values().cloned().collect(),
            zones: (*self.zones).clone(),
            machines: self.machines.values().cloned().collect(),
            maintenance: self.maintenance.values().cloned().collect(),
            faults: self.faults.values().cloned().collect(),
            work: self.work.values().cloned().collect(),
            contractors: self.contractors.values().cloned().collect(),
            permits: self.permits.values().cloned().collect(),
            incidents: self.incidents.values().cloned().collect(),
        }
    }

    pub fn from_entities(e: Entities) -> Self {
        let mut store = Store::default();
        store.apply(Effect::Zones(e.zones));
        e.users.into_iter().for_each(|x| store.apply(Effect::User(x)));
        e.machines.into_iter().for_each(|x| store.apply(Effect::Machine(x)));
        e.maintenance.into_iter().for_each(|x| store.apply(Effect::Maintenance(x)));
        e.faults.into_iter().for_each(|x| store.apply(Effect::Fault(x)));
        e.work.into_iter().for_each(|x| store.apply(Effect::Work(x)));
        e.contractors.into_iter().for_each(|x| store.apply(Effect::Contractor(x)));
        e.permits.into_iter().for_each(|x| store.apply(Effect::Permit(x)));
        e.incidents.into_iter().for_each(|x| store.apply(Effect::Incident(x)));
        store
    }
}

pub fn view_of(p: &Permit) -> PermitView {
    PermitView {
        permit_id: p.permit_id.clone(),
        permit_type: p.permit_type,
        zone_id: p.zone_id.clone(),
        valid_from: p.valid_from,
        valid_to: p.valid_to,
        state: p.state,
    }
}

