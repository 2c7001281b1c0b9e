use std::collections::BTreeMap;

use axum::extract::State;
use axum::http::StatusCode;
use axum::Json;
use railshop_core::contracts::Eligibility;
use railshop_core::time::serde_millis;
use railshop_core::zones::LayoutFile;
use railshop_core::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ApiError, AppState, Bearer, Body, Id, Q};
use crate::baseline;

type Reply<T> = Result<Json<T>, ApiError>;

/// A user without the credential digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserView {
    pub user_id: UserId,
    pub name: String,
    pub role: Role,
    pub active: bool,
}

impl From<User> for UserView {
    fn from(u: User) -> Self {
        Self {
            user_id: u.user_id,
            name: u.name,
            role: u.role,
            active: u.active,
        }
    }
}

pub async fn health(State(s): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "seq": s.engine.last_seq() }))
}

#[derive(Deserialize)]
pub struct LoginBody {
    name: String,
    credential: String,
}

#[derive(Serialize)]
pub struct LoginReply {
    token: String,
    #[serde(with = "serde_millis")]
    expires_at: Timestamp,
}

pub async fn login(State(s): State<AppState>, Body(b): Body<LoginBody>) -> Reply<LoginReply> {
    let session = s.run(move |e| e.login(&b.name, &b.credential)).await?;
    Ok(Json(LoginReply {
        token: session.token,
        expires_at: session.expires_at,
    }))
}

pub async fn logout(State(s): State<AppState>, Bearer(t): Bearer) -> Result<StatusCode, ApiError> {
    s.engine.authenticate(&t)?;
    s.engine.logout(&t);
    Ok(StatusCode::NO_CONTENT)
}

pub async fn me(State(s): State<AppState>, Bearer(t): Bearer) -> Reply<UserView> {
    Ok(Json(s.engine.authenticate(&t)?.into()))
}

// ---- users ----

pub async fn list_users(State(s): State<AppState>, Bearer(t): Bearer) -> Reply<Vec<UserView>> {
    s.engine.require(&t, Action::UserManage)?;
    Ok(Json(s.engine.users().into_iter().map(UserView::from).collect()))
}

#[derive(Deserialize)]
pub struct NewUserBody {
    name: String,
    role: Role,
    credential: String,
}

pub async fn create_user(State(s): State<AppState>, Bearer(t): Bearer, Body(b): Body<NewUserBody>) -> Reply<UserView> {
    let user = s.run(move |e| e.create_user(&t, &b.name, b.role, &b.credential)).await?;
    Ok(Json(user.into()))
}

#[derive(Deserialize)]
pub struct ActiveBody {
    active: bool,
}

pub async fn set_user_active(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<UserId>,
    Body(b): Body<ActiveBody>,
) -> Reply<UserView> {
    let user = s.run(move |e| e.set_user_active(&t, &id, b.active)).await?;
    Ok(Json(user.into()))
}

// ---- zones ----

pub async fn get_zones(State(s): State<AppState>, Bearer(t): Bearer) -> Reply<LayoutFile> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.zones().to_file()))
}

pub async fn put_zones(State(s): State<AppState>, Bearer(t): Bearer, Body(file): Body<LayoutFile>) -> Reply<LayoutFile> {
    let layout = ZoneLayout::from_file(file)?;
    let out = layout.to_file();
    s.run(move |e| e.load_zones(&t, layout)).await?;
    Ok(Json(out))
}

#[derive(Deserialize)]
pub struct ProbeQuery {
    #[serde(with = "serde_millis")]
    from: Timestamp,
    #[serde(with = "serde_millis")]
    to: Timestamp,
    #[serde(rename = "type")]
    permit_type: PermitType,
}

pub async fn zone_conflicts(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(zone): Id<ZoneId>,
    Q(q): Q<ProbeQuery>,
) -> Reply<Vec<ConflictReport>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.conflicts_probe(&zone, q.permit_type, q.from, q.to)?))
}

// ---- machines ----

#[derive(Deserialize)]
pub struct MachineQuery {
    status: Option<MachineStatus>,
    zone: Option<ZoneId>,
    criticality: Option<Criticality>,
}

pub async fn list_machines(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<MachineQuery>) -> Reply<Vec<MachinePlant>> {
    s.engine.authenticate(&t)?;
    let filter = MachineFilter {
        status: q.status,
        zone_id: q.zone,
        criticality: q.criticality,
    };
    Ok(Json(s.engine.list_machines(&filter)))
}

pub async fn register_machine(State(s): State<AppState>, Bearer(t): Bearer, Body(b): Body<NewMachine>) -> Reply<MachinePlant> {
    Ok(Json(s.run(move |e| e.register_machine(&t, b)).await?))
}

pub async fn get_machine(State(s): State<AppState>, Bearer(t): Bearer, Id(id): Id<MachineId>) -> Reply<MachinePlant> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.machine(&id)?))
}

#[derive(Deserialize)]
pub struct MachineStatusBody {
    new_status: MachineStatus,
    expected_version: u64,
}

pub async fn set_machine_status(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<MachineId>,
    Body(b): Body<MachineStatusBody>,
) -> Reply<MachinePlant> {
    Ok(Json(
        s.run(move |e| e.set_machine_status(&t, &id, b.new_status, b.expected_version))
            .await?,
    ))
}

#[derive(Deserialize)]
pub struct DescriptionBody {
    description: String,
}

pub async fn report_fault(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<MachineId>,
    Body(b): Body<DescriptionBody>,
) -> Reply<MachinePlant> {
    Ok(Json(s.run(move |e| e.report_fault(&t, &id, &b.description)).await?))
}

pub async fn record_maintenance(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<MachineId>,
    Body(b): Body<DescriptionBody>,
) -> Reply<MaintenanceRecord> {
    Ok(Json(s.run(move |e| e.record_maintenance(&t, &id, &b.description)).await?))
}

pub async fn maintenance_history(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<MachineId>,
) -> Reply<Vec<MaintenanceRecord>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.maintenance_history(&id)?))
}

#[derive(Deserialize)]
pub struct WorkBody {
    permit_id: PermitId,
}

pub async fn start_work(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<MachineId>,
    Body(b): Body<WorkBody>,
) -> Reply<MachineWork> {
    Ok(Json(s.run(move |e| e.start_machine_work(&t, &id, &b.permit_id)).await?))
}

// ---- contractors ----

pub async fn list_contractors(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Q(q): Q<ContractorFilter>,
) -> Reply<Vec<Contractor>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.list_contractors(&q)))
}

pub async fn register_contractor(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Body(b): Body<NewContractor>,
) -> Reply<Contractor> {
    Ok(Json(s.run(move |e| e.register_contractor(&t, b)).await?))
}

pub async fn get_contractor(State(s): State<AppState>, Bearer(t): Bearer, Id(id): Id<ContractorId>) -> Reply<Contractor> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.contractor(&id)?))
}

#[derive(Deserialize)]
pub struct ApprovalBody {
    new_status: ApprovalStatus,
    expected_version: u64,
}

pub async fn set_approval(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<ContractorId>,
    Body(b): Body<ApprovalBody>,
) -> Reply<Contractor> {
    Ok(Json(
        s.run(move |e| e.set_approval(&t, &id, b.new_status, b.expected_version))
            .await?,
    ))
}

#[derive(Deserialize)]
pub struct AtQuery {
    #[serde(default, with = "serde_millis::option")]
    at: Option<Timestamp>,
}

pub async fn available_count(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<AtQuery>) -> Reply<Value> {
    s.engine.authenticate(&t)?;
    let at = q.at.unwrap_or_else(|| s.engine.now());
    Ok(Json(json!({ "at": time::format(&at), "count": s.engine.available_count(at) })))
}

#[derive(Deserialize)]
pub struct EligibilityQuery {
    #[serde(rename = "type")]
    permit_type: PermitType,
    #[serde(default, with = "serde_millis::option")]
    at: Option<Timestamp>,
}

pub async fn eligibility(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<ContractorId>,
    Q(q): Q<EligibilityQuery>,
) -> Reply<Eligibility> {
    s.engine.authenticate(&t)?;
    let at = q.at.unwrap_or_else(|| s.engine.now());
    Ok(Json(s.engine.check_eligibility(&id, q.permit_type, at)?))
}

// ---- permits ----

pub async fn create_permit(State(s): State<AppState>, Bearer(t): Bearer, Body(b): Body<PermitRequest>) -> Reply<Permit> {
    Ok(Json(s.run(move |e| e.create_draft(&t, b)).await?))
}

pub async fn list_permits(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<PermitFilter>) -> Reply<Vec<Permit>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.list_permits(&q)))
}

pub async fn get_permit(State(s): State<AppState>, Bearer(t): Bearer, Id(id): Id<PermitId>) -> Reply<Permit> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.permit(&id)?))
}

#[derive(Deserialize)]
pub struct TransitionBody {
    event: PermitEvent,
    expected_version: u64,
    #[serde(default)]
    reason: Option<String>,
}

pub async fn transition(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<PermitId>,
    Body(b): Body<TransitionBody>,
) -> Reply<Permit> {
    Ok(Json(
        s.run(move |e| e.transition(&t, &id, b.event, b.expected_version, b.reason))
            .await?,
    ))
}

pub async fn permit_history(State(s): State<AppState>, Bearer(t): Bearer, Id(id): Id<PermitId>) -> Reply<Vec<StateChange>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.permit_history(&id)?))
}

// ---- incidents ----

pub async fn report_incident(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Body(b): Body<NewIncident>,
) -> Reply<IncidentReported> {
    Ok(Json(s.run(move |e| e.report_incident(&t, b)).await?))
}

pub async fn list_incidents(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<IncidentFilter>) -> Reply<Vec<Incident>> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.list_incidents(&q)))
}

pub async fn get_incident(State(s): State<AppState>, Bearer(t): Bearer, Id(id): Id<IncidentId>) -> Reply<Incident> {
    s.engine.authenticate(&t)?;
    Ok(Json(s.engine.incident(&id)?))
}

#[derive(Deserialize)]
pub struct AdvanceBody {
    target_state: IncidentState,
    #[serde(default)]
    note: Option<String>,
    expected_version: u64,
}

pub async fn advance_incident(
    State(s): State<AppState>,
    Bearer(t): Bearer,
    Id(id): Id<IncidentId>,
    Body(b): Body<AdvanceBody>,
) -> Reply<Incident> {
    Ok(Json(
        s.run(move |e| e.advance_incident(&t, &id, b.target_state, b.note.as_deref(), b.expected_version))
            .await?,
    ))
}

// ---- audit and reports ----

#[derive(Deserialize)]
pub struct AuditQuery {
    entity_kind: Option<String>,
    entity_id: Option<String>,
}

pub async fn audit_log(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<AuditQuery>) -> Reply<Vec<AuditEntry>> {
    s.engine.require(&t, Action::ReportsView)?;
    let entries = match (q.entity_kind, q.entity_id) {
        (Some(kind), Some(id)) => s.engine.trace(&EntityRef::new(kind, id)),
        (None, None) => s.engine.audit_entries().iter().map(|e| (**e).clone()).collect(),
        (Some(kind), None) => s
            .engine
            .audit_entries()
            .iter()
            .filter(|e| e.entity.kind == kind)
            .map(|e| (**e).clone())
            .collect(),
        (None, Some(_)) => return Err(ApiError::bad_request("entity_id needs entity_kind")),
    };
    Ok(Json(entries))
}

pub async fn audit_verify(State(s): State<AppState>, Bearer(t): Bearer) -> Reply<ChainReport> {
    s.engine.require(&t, Action::ReportsView)?;
    Ok(Json(s.run(|e| e.verify_chain()).await?))
}

#[derive(Deserialize)]
pub struct PipelineQuery {
    #[serde(default, with = "serde_millis::option")]
    from: Option<Timestamp>,
    #[serde(default, with = "serde_millis::option")]
    to: Option<Timestamp>,
    baseline: Option<String>,
}

pub async fn pipeline_report(State(s): State<AppState>, Bearer(t): Bearer, Q(q): Q<PipelineQuery>) -> Reply<PipelineReport> {
    s.engine.require(&t, Action::ReportsView)?;
    let name = q.baseline.unwrap_or_else(|| baseline::DEFAULT_FILE.to_owned());
    if !baseline::is_plain_name(&name) {
        return Err(ApiError::bad_request("baseline must be a plain file name"));
    }
    let dir = s
        .baseline_dir
        .clone()
        .ok_or_else(|| ApiError::bad_request("no baseline directory configured"))?;
    let path = dir.join(&name);
    if !path.is_file() {
        return Err(ApiError::not_found(format!("baseline {name} not found")));
    }
    let manual = baseline::read(&path).map_err(|_| ApiError::bad_request(format!("baseline {name} is malformed")))?;
    let (from, to) = report_window(&s.engine, q.from, q.to);
    Ok(Json(s.engine.pipeline_report(from, to, &manual)?))
}

/// Defaults to the span of the whole log.
pub(crate) fn report_window(engine: &Engine, from: Option<Timestamp>, to: Option<Timestamp>) -> (Timestamp, Timestamp) {
    let log = engine.audit_entries();
    let now = engine.now();
    let first = log.first().map_or(now, |e| e.at);
    let last = log.last().map_or(now, |e| e.at).max(now);
    (from.unwrap_or(first), to.unwrap_or(last))
}

pub async fn incident_report(
    State(s): State<AppState>,
    Bearer(t): Bearer,
) -> Reply<BTreeMap<IncidentCategory, f64>> {
    s.engine.require(&t, Action::ReportsView)?;
    Ok(Json(s.engine.incident_report()))
}
