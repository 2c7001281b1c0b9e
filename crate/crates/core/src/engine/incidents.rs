use serde::{Deserialize, Serialize};

use super::permits::system_move;
use super::{check_version, input_of, Engine};
use crate::access::Role;
use crate::audit::{Actor, EntityRef};
use crate::error::{Error, Result};
use crate::ids::{IncidentId, PermitId};
use crate::incidents::{advance, Incident, IncidentState, NewIncident, Severity};
use crate::permits::{HistoryEvent, PermitState};
use crate::store::Effect;

/// Result of [`Engine::report_incident`]: the incident plus every permit it
/// suspended, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentReported {
    pub incident: Incident,
    pub suspended: Vec<PermitId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidentFilter {
    #[serde(default)]
    pub severity: Option<Severity>,
    #[serde(default)]
    pub state: Option<IncidentState>,
    #[serde(default)]
    pub permit: Option<PermitId>,
}

impl IncidentFilter {
    pub fn matches(&self, i: &Incident) -> bool {
        self.severity.map_or(true, |s| i.severity == s)
            && self.state.map_or(true, |s| i.state == s)
            && self.permit.as_ref().map_or(true, |p| i.permit_id.as_ref() == Some(p))
    }
}

fn entity(id: &IncidentId) -> EntityRef {
    EntityRef::new("incident", id)
}

fn by_report_time(list: &mut [Incident]) {
    list.sort_by(|a, b| {
        (a.reported_at, &a.incident_id).cmp(&(b.reported_at, &b.incident_id))
    });
}

impl Engine {
    /// Records an incident. MAJOR and FATAL incidents suspend the linked
    /// permit and every ACTIVE permit whose zone overlaps the incident zone.
    pub fn report_incident(&self, token: &str, input: NewIncident) -> Result<IncidentReported> {
        self.mutate("incident.report", |tx| {
            let user = self.actor_in(tx, token, crate::access::Action::IncidentReport)?;
            input.validate()?;
            if !tx.store.zones().contains_zone(&input.zone_id) {
                return Err(Error::not_found("zone", &input.zone_id));
            }
            if let Some(pid) = &input.permit_id {
                tx.store.permit(pid).ok_or_else(|| Error::not_found("permit", pid))?;
            }
            let incident = Incident {
                incident_id: IncidentId::from_ordinal(tx.store.incident_count() + 1),
                title: input.title.clone(),
                description: input.description.clone(),
                severity: input.severity,
                category: input.category,
                zone_id: input.zone_id.clone(),
                permit_id: input.permit_id.clone(),
                reported_by: user.user_id.clone(),
                reported_at: tx.now,
                state: IncidentState::Reported,
                corrective_actions: Vec::new(),
                version: 1,
            };
            tx.emit(
                Actor::User(user.user_id),
                "incident.report",
                entity(&incident.incident_id),
                input_of(&input),
                vec![Effect::Incident(incident.clone())],
            );
            let mut suspended = Vec::new();
            if input.severity.suspends_work() {
                let layout = tx.store.zones().clone();
                let targets: Vec<_> = tx
                    .store
                    .live_permits()
                    .filter(|p| p.state == PermitState::Active)
                    .filter(|p| {
                        input.permit_id.as_ref() == Some(&p.permit_id) || layout.overlap(&p.zone_id, &input.zone_id)
                    })
                    .cloned()
                    .collect();
                let reason = format!("INCIDENT:{}", incident.incident_id);
                for permit in targets {
                    system_move(tx, &permit, PermitState::Suspended, HistoryEvent::Suspend, "permit.suspend", reason.clone());
                    suspended.push(permit.permit_id);
                }
            }
            suspended.sort();
            Ok(IncidentReported { incident, suspended })
        })
    }

    /// Moves an incident to its immediate successor state.
    pub fn advance_incident(
        &self,
        token: &str,
        incident_id: &IncidentId,
        target: IncidentState,
        note: Option<&str>,
        expected_version: u64,
    ) -> Result<Incident> {
        let action = target.entry_action();
        self.mutate(action.name(), |tx| {
            let user = self.actor_in(tx, token, action)?;
            let current = tx
                .store
                .incident(incident_id)
                .ok_or_else(|| Error::not_found("incident", incident_id))?;
            if current.state.successor() != Some(target) {
                return Err(Error::IllegalTransition {
                    from: current.state.name().into(),
                    event: target.name().into(),
                });
            }
            check_version("incident", incident_id, expected_version, current.version)?;
            let next = advance(
                current,
                target,
                note,
                &user.user_id,
                tx.now,
                user.role == Role::SafetyOfficer,
            )?;
            let audit_action = match target {
                IncidentState::UnderInvestigation => "incident.investigate",
                IncidentState::CorrectiveAction => "incident.corrective_action",
                IncidentState::Closed => "incident.close",
                IncidentState::Reported => unreachable!("REPORTED is never a successor"),
            };
            tx.emit(
                Actor::User(user.user_id),
                audit_action,
                entity(incident_id),
                serde_json::json!({ "target_state": target, "note": note, "expected_version": expected_version }),
                vec![Effect::Incident(next.clone())],
            );
            Ok(next)
        })
    }

    pub fn incident(&self, id: &IncidentId) -> Result<Incident> {
        self.snapshot()
            .incident(id)
            .cloned()
            .ok_or_else(|| Error::not_found("incident", id))
    }

    /// Incidents linked to a permit, ordered by report time then id.
    pub fn incidents_for_permit(&self, permit_id: &PermitId) -> Result<Vec<Incident>> {
        let store = self.snapshot();
        store.permit(permit_id).ok_or_else(|| Error::not_found("permit", permit_id))?;
        let mut list: Vec<_> = store.incidents_for_permit(permit_id).into_iter().cloned().collect();
        by_report_time(&mut list);
        Ok(list)
    }

    pub fn list_incidents(&self, filter: &IncidentFilter) -> Vec<Incident> {
        let mut list: Vec<_> = self.snapshot().incidents().filter(|i| filter.matches(i)).cloned().collect();
        by_report_time(&mut list);
        list
    }
}
