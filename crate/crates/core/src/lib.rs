//! Workshop safety workflow engine.
//!
//! Machines, contractors, permits-to-work and incidents live in one
//! [`Engine`]. Every state change goes through a single commit point that
//! appends hash-chained [`AuditEntry`] lines to a journal; the journal is
//! both the audit trail and the durable record that [`persistence`] replays.

pub mod access;
pub mod audit;
pub mod contracts;
pub mod engine;
pub mod error;
pub mod ids;
pub mod incidents;
pub mod journal;
pub mod metrics;
pub mod permits;
pub mod persistence;
pub mod registry;
pub mod store;
pub mod time;
pub mod zones;

pub use access::{Action, Decision, DenyReason, Role, Session, User};
pub use audit::{verify_entries, Actor, AuditEntry, ChainReport, EntityRef, Hash256};
pub use contracts::{ApprovalStatus, Certification, Contractor, Eligibility, Ineligibility, NewContractor};
pub use engine::{
    ContractorFilter, Engine, EngineConfig, IncidentFilter, IncidentReported, PermitFilter,
};
pub use error::{Error, ErrorClass, Guard, Result};
pub use ids::{ContractorId, FaultId, IncidentId, MachineId, PermitId, RecordId, UserId, WorkId, ZoneId};
pub use incidents::{Incident, IncidentCategory, IncidentState, NewIncident, Severity};
pub use metrics::{PipelineReport, Stage, StageComparison, StageTiming};
pub use permits::{Permit, PermitEvent, PermitRequest, PermitState, PermitType, StateChange};
pub use registry::{
    Criticality, FaultReport, MachineFilter, MachinePlant, MachineStatus, MachineWork, MaintenanceRecord,
    Manufacture, NewMachine,
};
pub use store::Store;
pub use time::{Clock, ManualClock, SystemClock, Timestamp};
pub use zones::{ConflictReport, Point, Zone, ZoneKind, ZoneLayout};
