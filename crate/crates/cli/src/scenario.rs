//! Scenario and seed files.
//!
//! ```json
//! {
//!   "start": "2026-03-02T08:00:00.000Z",
//!   "users": [{"name": "admin", "role": "ADMIN", "credential": "..."}],
//!   "zones_file": "zones.json",
//!   "machines": [{"asset_code": "LATHE-042", ...}],
//!   "contractors": [{"vendor_code": "V-1", ..., "approved_by": "sup"}],
//!   "baseline": [{"stage": "PERMIT_APPROVAL", "duration": 200}],
//!   "script": [{"at": "...", "actor": "tech", "op": "permit.create", "args": {...}, "as": "p1"}]
//! }
//! ```
//!
//! The first ADMIN in `users` bootstraps the store and performs the setup.
//! In `args`, a string `"$label"` is replaced by the id bound to `label`:
//! machines are bound to their asset code, contractors to their vendor code,
//! and script steps to their `as` label. Steps run with the clock set to
//! their `at`, which must not go backwards.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use railshop_core::time::serde_millis;
use railshop_core::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, with = "serde_millis::option")]
    pub start: Option<Timestamp>,
    pub users: Vec<UserSpec>,
    #[serde(default)]
    pub zones_file: Option<PathBuf>,
    #[serde(default)]
    pub machines: Vec<NewMachine>,
    #[serde(default)]
    pub contractors: Vec<ContractorSpec>,
    #[serde(default)]
    pub baseline: Vec<StageTiming>,
    #[serde(default)]
    pub script: Vec<Step>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub name: String,
    pub role: Role,
    pub credential: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ContractorSpec {
    #[serde(flatten)]
    pub contractor: NewContractor,
    /// User who approves the contractor during setup.
    #[serde(default)]
    pub approved_by: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    #[serde(with = "serde_millis")]
    pub at: Timestamp,
    pub actor: String,
    pub op: String,
    #[serde(default)]
    pub args: Value,
    #[serde(default, rename = "as")]
    pub label: Option<String>,
    /// The step must fail with this error code.
    #[serde(default)]
    pub expect_error: Option<String>,
}

impl Scenario {
    /// Reads a scenario; `zones_file` is resolved against the file's directory.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut s: Scenario =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let (Some(zones), Some(dir)) = (&s.zones_file, path.parent()) {
            if zones.is_relative() {
                s.zones_file = Some(dir.join(zones));
            }
        }
        if !s.users.iter().any(|u| u.role == Role::Admin) {
            return Err(CliError::Usage("scenario needs at least one ADMIN user".into()));
        }
        if s.script.windows(2).any(|w| w[1].at < w[0].at) {
            return Err(CliError::Usage("script timestamps must not go backwards".into()));
        }
        Ok(s)
    }

    pub fn layout(&self) -> Result<Option<ZoneLayout>, CliError> {
        let Some(path) = &self.zones_file else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(Some(ZoneLayout::from_json(&text)?))
    }

    /// When the first step happens, or `start`.
    pub fn start_time(&self) -> Option<Timestamp> {
        self.start.or_else(|| self.script.first().map(|s| s.at))
    }
}

/// Drives a scenario through an engine.
pub struct Runner<'a> {
    engine: &'a Engine,
    credentials: BTreeMap<String, String>,
    tokens: BTreeMap<String, String>,
    labels: BTreeMap<String, String>,
}

impl<'a> Runner<'a> {
    pub fn new(engine: &'a Engine, scenario: &Scenario) -> Self {
        Self {
            engine,
            credentials: scenario
                .users
                .iter()
                .map(|u| (u.name.clone(), u.credential.clone()))
                .collect(),
            tokens: BTreeMap::new(),
            labels: BTreeMap::new(),
        }
    }

    fn token(&mut self, name: &str) -> Result<String, CliError> {
        let now = self.engine.now();
        if let Some(t) = self.tokens.get(name) {
            if self.engine.session(t).is_some_and(|s| !s.is_expired(now)) {
                return Ok(t.clone());
            }
        }
        let credential = self
            .credentials
            .get(name)
            .ok_or_else(|| CliError::Usage(format!("unknown actor {name:?}")))?;
        let token = self.engine.login(name, credential)?.token;
        self.tokens.insert(name.to_owned(), token.clone());
        Ok(token)
    }

    /// Users, zones, machines and contractors. Refuses a store that already
    /// has users.
    pub fn setup(&mut self, scenario: &Scenario) -> Result<(), CliError> {
        if !self.engine.users().is_empty() {
            return Err(CliError::Failed("data directory is already seeded".into()));
        }
        let admin = scenario
            .users
            .iter()
            .find(|u| u.role == Role::Admin)
            .expect("checked on read");
        self.engine.bootstrap_admin(&admin.name, &admin.credential)?;
        let root = self.token(&admin.name)?;
        for u in scenario.users.iter().filter(|u| !std::ptr::eq(*u, admin)) {
            self.engine.create_user(&root, &u.name, u.role, &u.credential)?;
        }
        if let Some(layout) = scenario.layout()? {
            self.engine.load_zones(&root, layout)?;
        }
        for m in &scenario.machines {
            let made = self.engine.register_machine(&root, m.clone())?;
            self.labels.insert(m.asset_code.clone(), made.machine_id.to_string());
        }
        for c in &scenario.contractors {
            let made = self.engine.register_contractor(&root, c.contractor.clone())?;
            self.labels
                .insert(c.contractor.vendor_code.clone(), made.contractor_id.to_string());
            if let Some(approver) = &c.approved_by {
                let token = self.token(approver)?;
                self.engine
                    .set_approval(&token, &made.contractor_id, ApprovalStatus::Approved, made.version)?;
            }
        }
        Ok(())
    }

    fn resolve(&self, value: &Value) -> Result<Value, CliError> {
        Ok(match value {
            Value::String(s) if s.starts_with('$') => {
                let id = self
                    .labels
                    .get(&s[1..])
                    .ok_or_else(|| CliError::Usage(format!("unknown label {s}")))?;
                Value::String(id.clone())
            }
            Value::Array(items) => Value::Array(items.iter().map(|v| self.resolve(v)).collect::<Result<_, _>>()?),
            Value::Object(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| Ok((k.clone(), self.resolve(v)?)))
                    .collect::<Result<_, CliError>>()?,
            ),
            other => other.clone(),
        })
    }

    /// Runs one step; returns the id of what it created or changed.
    pub fn step(&mut self, step: &Step) -> Result<String, CliError> {
        let token = self.token(&step.actor)?;
        let args = self.resolve(&step.args)?;
        let outcome = self.dispatch(&token, &step.op, args);
        match (&step.expect_error, outcome) {
            (None, Ok(Ok(id))) => {
                if let Some(label) = &step.label {
                    self.labels.insert(label.clone(), id.clone());
                }
                Ok(id)
            }
            (None, Ok(Err(e))) => Err(e.into()),
            (Some(code), Ok(Err(e))) if e.code() == code => Ok(String::new()),
            (Some(code), Ok(Err(e))) => Err(CliError::Failed(format!("expected {code}, got {}: {e}", e.code()))),
            (Some(code), Ok(Ok(_))) => Err(CliError::Failed(format!("expected {code}, but the step succeeded"))),
            (_, Err(usage)) => Err(usage),
        }
    }

    /// Outer error: malformed step. Inner error: the engine refused.
    fn dispatch(&self, token: &str, op: &str, args: Value) -> Result<Result<String>, CliError> {
        let e = self.engine;
        if let Some(event) = op.strip_prefix("permit.").and_then(permit_event) {
            #[derive(Deserialize)]
            struct A {
                permit: PermitId,
                #[serde(default)]
                reason: Option<String>,
            }
            let a: A = parse(op, args)?;
            return Ok(e.permit(&a.permit).and_then(|p| {
                e.transition(token, &a.permit, event, p.version, a.reason)
                    .map(|p| p.permit_id.to_string())
            }));
        }
        Ok(match op {
            "permit.create" => {
                let r: PermitRequest = parse(op, args)?;
                e.create_draft(token, r).map(|p| p.permit_id.to_string())
            }
            "permit.sweep" => e.expire_sweep().map(|ids| ids.len().to_string()),
            "incident.report" => {
                let r: NewIncident = parse(op, args)?;
                e.report_incident(token, r).map(|r| r.incident.incident_id.to_string())
            }
            "incident.advance" => {
                #[derive(Deserialize)]
                struct A {
                    incident: IncidentId,
                    target_state: IncidentState,
                    #[serde(default)]
                    note: Option<String>,
                }
                let a: A = parse(op, args)?;
                e.incident(&a.incident).and_then(|i| {
                    e.advance_incident(token, &a.incident, a.target_state, a.note.as_deref(), i.version)
                        .map(|i| i.incident_id.to_string())
                })
            }
            "machine.register" => {
                let m: NewMachine = parse(op, args)?;
                e.register_machine(token, m).map(|m| m.machine_id.to_string())
            }
            "machine.status" => {
                #[derive(Deserialize)]
                struct A {
                    machine: MachineId,
                    new_status: MachineStatus,
                }
                let a: A = parse(op, args)?;
                e.machine(&a.machine).and_then(|m| {
                    e.set_machine_status(token, &a.machine, a.new_status, m.version)
                        .map(|m| m.machine_id.to_string())
                })
            }
            "machine.fault" | "machine.maintenance" => {
                #[derive(Deserialize)]
                struct A {
                    machine: MachineId,
                    description: String,
                }
                let a: A = parse(op, args)?;
                if op == "machine.fault" {
                    e.report_fault(token, &a.machine, &a.description)
                        .map(|m| m.machine_id.to_string())
                } else {
                    e.record_maintenance(token, &a.machine, &a.description)
                        .map(|r| r.record_id.to_string())
                }
            }
            "machine.work" => {
                #[derive(Deserialize)]
                struct A {
                    machine: MachineId,
                    permit: PermitId,
                }
                let a: A = parse(op, args)?;
                e.start_machine_work(token, &a.machine, &a.permit)
                    .map(|w| w.work_id.to_string())
            }
            "contract.register" => {
                let c: NewContractor = parse(op, args)?;
                e.register_contractor(token, c).map(|c| c.contractor_id.to_string())
            }
            "contract.approval" => {
                #[derive(Deserialize)]
                struct A {
                    contractor: ContractorId,
                    new_status: ApprovalStatus,
                }
                let a: A = parse(op, args)?;
                e.contractor(&a.contractor).and_then(|c| {
                    e.set_approval(token, &a.contractor, a.new_status, c.version)
                        .map(|c| c.contractor_id.to_string())
                })
            }
            other => return Err(CliError::Usage(format!("unknown op {other:?}"))),
        })
    }
}

fn permit_event(name: &str) -> Option<PermitEvent> {
    serde_json::from_value(Value::String(name.to_ascii_uppercase())).ok()
}

fn parse<T: DeserializeOwned>(op: &str, args: Value) -> Result<T, CliError> {
    serde_json::from_value(args).map_err(|e| CliError::Usage(format!("{op}: {e}")))
}
