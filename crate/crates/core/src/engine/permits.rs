use serde::{Deserialize, Serialize};

use super::{check_version, input_of, Engine, Tx};
use crate::access::{role_permits, Action, Role};
use crate::audit::{Actor, EntityRef};
use crate::contracts::check_eligibility;
use crate::error::{Error, Guard, Result};
use crate::ids::{PermitId, UserId, ZoneId};
use crate::incidents::IncidentState;
use crate::permits::{guards_for, next_state, HistoryEvent, Permit, PermitEvent, PermitRequest, PermitState, PermitType, StateChange};
use crate::registry::MachineStatus;
use crate::store::{Effect, Store};
use crate::time::{format, Timestamp};
use crate::zones::{ConflictReport, PermitRequestView};

/// Query for [`Engine::list_permits`]; every given field must match.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermitFilter {
    #[serde(default)]
    pub state: Option<PermitState>,
    #[serde(default)]
    pub user: Option<UserId>,
    #[serde(default)]
    pub zone: Option<ZoneId>,
}

impl PermitFilter {
    pub fn matches(&self, p: &Permit) -> bool {
        self.state.map_or(true, |s| p.state == s)
            && self.user.as_ref().map_or(true, |u| &p.requester_id == u)
            && self.zone.as_ref().map_or(true, |z| &p.zone_id == z)
    }
}

pub(crate) fn entity(id: &PermitId) -> EntityRef {
    EntityRef::new("permit", id)
}

/// Moves `permit` to `to` as SYSTEM, recording one audit entry.
pub(crate) fn system_move(tx: &mut Tx, permit: &Permit, to: PermitState, event: HistoryEvent, action: &str, reason: String) -> Permit {
    let mut next = permit.clone();
    next.record(to, event, Actor::System, tx.now, Some(reason));
    tx.emit(
        Actor::System,
        action,
        entity(&next.permit_id),
        serde_json::Value::Null,
        vec![Effect::Permit(next.clone())],
    );
    next
}

/// Expires every non-terminal permit whose window ended before `tx.now`.
pub(crate) fn sweep(tx: &mut Tx) -> Vec<PermitId> {
    let mut overdue = tx.store.overdue_permits(tx.now.timestamp_millis());
    overdue.sort();
    for id in &overdue {
        let permit = tx.store.permit(id).cloned().expect("indexed permit exists");
        system_move(
            tx,
            &permit,
            PermitState::Expired,
            HistoryEvent::Expire,
            "permit.expire",
            format!("valid_to {} passed", format(&permit.valid_to)),
        );
    }
    overdue
}

fn request_view(p: &Permit) -> PermitRequestView {
    PermitRequestView {
        permit_type: p.permit_type,
        zone_id: p.zone_id.clone(),
        valid_from: p.valid_from,
        valid_to: p.valid_to,
    }
}

/// Conflicts of `p` against the other APPROVED/ACTIVE permits.
pub(crate) fn conflicts_of(store: &Store, p: &Permit) -> Vec<ConflictReport> {
    let others: Vec<_> = store
        .live_views()
        .into_iter()
        .filter(|o| o.permit_id != p.permit_id)
        .collect();
    store.zones().permit_conflicts(&request_view(p), &others)
}

impl Engine {
    /// Evaluates the guards for `event` in order; the first failure wins.
    fn check_guards(&self, store: &Store, p: &Permit, event: PermitEvent, now: Timestamp) -> Result<()> {
        for guard in guards_for(event) {
            match guard {
                Guard::G1 => {
                    if let Some(cid) = &p.contractor_id {
                        let contractor = store.contractor(cid).ok_or_else(|| Error::not_found("contractor", cid))?;
                        let e = check_eligibility(contractor, p.permit_type, now, self.config.min_safety_rating);
                        if let Some(reason) = e.reason {
                            let code = serde_json::to_value(reason)?;
                            return Err(Error::guard(
                                Guard::G1,
                                format!("contractor {cid} ineligible: {}", code.as_str().unwrap_or("?")),
                            ));
                        }
                    }
                }
                Guard::G2 => {
                    if let Some(mid) = &p.machine_id {
                        let machine = store.machine(mid).ok_or_else(|| Error::not_found("machine", mid))?;
                        if machine.status != MachineStatus::Operational {
                            return Err(Error::guard(
                                Guard::G2,
                                format!("machine {} is {:?}", machine.asset_code, machine.status),
                            ));
                        }
                    }
                }
                Guard::G3 => {
                    let conflicts = conflicts_of(store, p);
                    if !conflicts.is_empty() {
                        return Err(Error::GuardViolation {
                            guard: Guard::G3,
                            detail: format!("{} conflicting permit(s)", conflicts.len()),
                            conflicts,
                        });
                    }
                }
                Guard::G4 => {
                    if now >= p.valid_to {
                        return Err(Error::guard(Guard::G4, format!("window ended at {}", format(&p.valid_to))));
                    }
                }
                Guard::G5 => {
                    let opens = p.valid_from - self.config.activation_grace;
                    if now < opens || now > p.valid_to {
                        return Err(Error::guard(
                            Guard::G5,
                            format!("activation outside [{}, {}]", format(&opens), format(&p.valid_to)),
                        ));
                    }
                }
                Guard::G6 => {
                    let open: Vec<String> = store
                        .incidents_for_permit(&p.permit_id)
                        .into_iter()
                        .filter(|i| !matches!(i.state, IncidentState::Closed | IncidentState::CorrectiveAction))
                        .map(|i| i.incident_id.to_string())
                        .collect();
                    if !open.is_empty() {
                        return Err(Error::guard(Guard::G6, format!("open incidents: {}", open.join(", "))));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn create_draft(&self, token: &str, request: PermitRequest) -> Result<Permit> {
        self.mutate("permit.create", |tx| {
            let user = self.actor_in(tx, token, Action::PermitSubmit)?;
            let store = &tx.store;
            if !store.zones().contains_zone(&request.zone_id) {
                return Err(Error::not_found("zone", &request.zone_id));
            }
            if let Some(mid) = &request.machine_id {
                store.machine(mid).ok_or_else(|| Error::not_found("machine", mid))?;
            }
            if let Some(cid) = &request.contractor_id {
                store.contractor(cid).ok_or_else(|| Error::not_found("contractor", cid))?;
            } else if user.role == Role::Contractor {
                return Err(Error::Validation("contractor_id is required for CONTRACTOR requesters".into()));
            }
            if request.valid_from >= request.valid_to {
                return Err(Error::InvalidWindow);
            }
            let permit = Permit {
                permit_id: PermitId::from_ordinal(store.permit_count() + 1),
                permit_type: request.permit_type,
                requester_id: user.user_id.clone(),
                contractor_id: request.contractor_id.clone(),
                machine_id: request.machine_id.clone(),
                zone_id: request.zone_id.clone(),
                description: request.description.clone(),
                valid_from: request.valid_from,
                valid_to: request.valid_to,
                state: PermitState::Draft,
                state_history: Vec::new(),
                version: 1,
            };
            tx.emit(
                Actor::User(user.user_id),
                "permit.create",
                entity(&permit.permit_id),
                input_of(&request),
                vec![Effect::Permit(permit.clone())],
            );
            Ok(permit)
        })
    }

    /// Applies `event` to a permit. Checks run in a fixed order: session,
    /// role (CANCEL is also open to the requester), transition table,
    /// version, four-eyes, then the event's guards.
    pub fn transition(
        &self,
        token: &str,
        permit_id: &PermitId,
        event: PermitEvent,
        expected_version: u64,
        reason: Option<String>,
    ) -> Result<Permit> {
        let action = event.action();
        self.mutate(action.name(), |tx| {
            let user = self.user_in(tx, token)?;
            let permit = tx
                .store
                .permit(permit_id)
                .cloned()
                .ok_or_else(|| Error::not_found("permit", permit_id))?;
            let requester_cancel = event == PermitEvent::Cancel && permit.requester_id == user.user_id;
            if !role_permits(user.role, action) && !requester_cancel {
                return Err(Error::Unauthorized(action));
            }
            let to = next_state(permit.state, event).ok_or_else(|| Error::IllegalTransition {
                from: permit.state.to_string(),
                event: event.to_string(),
            })?;
            check_version("permit", permit_id, expected_version, permit.version)?;
            if event == PermitEvent::Approve
                && (permit.requester_id == user.user_id || permit.submitted_by() == Some(&user.user_id))
            {
                return Err(Error::FourEyesViolation);
            }
            self.check_guards(&tx.store, &permit, event, tx.now)?;
            let mut next = permit;
            next.record(to, event.into(), Actor::User(user.user_id.clone()), tx.now, reason.clone());
            tx.emit(
                Actor::User(user.user_id),
                action.name(),
                entity(permit_id),
                serde_json::json!({ "event": event, "expected_version": expected_version, "reason": reason }),
                vec![Effect::Permit(next.clone())],
            );
            Ok(next)
        })
    }

    /// Expires overdue permits now; returns the ids changed, sorted.
    pub fn expire_sweep(&self) -> Result<Vec<PermitId>> {
        let mut expired = Vec::new();
        self.mutate("permit.expire", |tx| {
            // mutate already swept; report what that pass changed
            expired = tx
                .pending_entities("permit.expire")
                .into_iter()
                .map(PermitId::new)
                .collect();
            Ok(())
        })?;
        expired.sort();
        Ok(expired)
    }

    pub fn permit(&self, id: &PermitId) -> Result<Permit> {
        self.snapshot()
            .permit(id)
            .cloned()
            .ok_or_else(|| Error::not_found("permit", id))
    }

    pub fn permit_history(&self, id: &PermitId) -> Result<Vec<StateChange>> {
        Ok(self.permit(id)?.state_history)
    }

    pub fn list_permits(&self, filter: &PermitFilter) -> Vec<Permit> {
        let store = self.snapshot();
        match &filter.user {
            Some(user) => store
                .permits_by_user(user)
                .into_iter()
                .filter(|p| filter.matches(p))
                .cloned()
                .collect(),
            None => store.permits().filter(|p| filter.matches(p)).cloned().collect(),
        }
    }

    /// Permits requested by `user`, in creation order.
    pub fn permits_by_user(&self, user: &UserId) -> Result<Vec<Permit>> {
        let store = self.snapshot();
        store.user(user).ok_or_else(|| Error::not_found("user", user))?;
        Ok(store.permits_by_user(user).into_iter().cloned().collect())
    }

    /// Dry run of G3 for a hypothetical permit.
    pub fn conflicts_probe(
        &self,
        zone_id: &ZoneId,
        permit_type: PermitType,
        from: Timestamp,
        to: Timestamp,
    ) -> Result<Vec<ConflictReport>> {
        let store = self.snapshot();
        if !store.zones().contains_zone(zone_id) {
            return Err(Error::not_found("zone", zone_id));
        }
        if from >= to {
            return Err(Error::InvalidWindow);
        }
        let candidate = PermitRequestView {
            permit_type,
            zone_id: zone_id.clone(),
            valid_from: from,
            valid_to: to,
        };
        Ok(store.zones().permit_conflicts(&candidate, &store.live_views()))
    }
}

impl Tx {
    /// Entity ids of pending entries with `action`.
    pub(crate) fn pending_entities(&self, action: &str) -> Vec<String> {
        self.pending
            .iter()
            .filter(|p| p.action == action)
            .map(|p| p.entity.id.clone())
            .collect()
    }
}

