//! Incident records and the forward-only investigation workflow.

use serde::{Deserialize, Serialize};

use crate::access::Action;
use crate::error::{Error, Guard, Result};
use crate::ids::{IncidentId, PermitId, UserId, ZoneId};
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Minor,
    Major,
    Fatal,
}

impl Severity {
    /// MAJOR and FATAL incidents suspend nearby work.
    pub fn suspends_work(self) -> bool {
        matches!(self, Severity::Major | Severity::Fatal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IncidentCategory {
    Laceration,
    Abrasion,
    Burn,
    Fall,
    ElectricShock,
    Other,
}

impl IncidentCategory {
    pub const ALL: [IncidentCategory; 6] = [
        IncidentCategory::Laceration,
        IncidentCategory::Abrasion,
        IncidentCategory::Burn,
        IncidentCategory::Fall,
        IncidentCategory::ElectricShock,
        IncidentCategory::Other,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IncidentState {
    Reported,
    UnderInvestigation,
    CorrectiveAction,
    Closed,
}

impl IncidentState {
    pub const ALL: [IncidentState; 4] = [
        IncidentState::Reported,
        IncidentState::UnderInvestigation,
        IncidentState::CorrectiveAction,
        IncidentState::Closed,
    ];

    pub fn successor(self) -> Option<IncidentState> {
        match self {
            IncidentState::Reported => Some(IncidentState::UnderInvestigation),
            IncidentState::UnderInvestigation => Some(IncidentState::CorrectiveAction),
            IncidentState::CorrectiveAction => Some(IncidentState::Closed),
            IncidentState::Closed => None,
        }
    }

    /// Permission needed to enter this state.
    pub fn entry_action(self) -> Action {
        match self {
            IncidentState::Closed => Action::IncidentClose,
            _ => Action::IncidentInvestigate,
        }
    }

    /// Counts as resolved for permit closure.
    pub fn releases_permit(self) -> bool {
        matches!(self, IncidentState::CorrectiveAction | IncidentState::Closed)
    }

    pub fn name(self) -> &'static str {
        match self {
            IncidentState::Reported => "REPORTED",
            IncidentState::UnderInvestigation => "UNDER_INVESTIGATION",
            IncidentState::CorrectiveAction => "CORRECTIVE_ACTION",
            IncidentState::Closed => "CLOSED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectiveAction {
    pub text: String,
    #[serde(with = "serde_millis")]
    pub at: Timestamp,
    pub by: UserId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incident {
    pub incident_id: IncidentId,
    pub title: String,
    pub description: String,
    pub severity: Severity,
    pub category: IncidentCategory,
    pub zone_id: ZoneId,
    pub permit_id: Option<PermitId>,
    pub reported_by: UserId,
    #[serde(with = "serde_millis")]
    pub reported_at: Timestamp,
    pub state: IncidentState,
    pub corrective_actions: Vec<CorrectiveAction>,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewIncident {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub severity: Severity,
    pub category: IncidentCategory,
    pub zone_id: ZoneId,
    #[serde(default)]
    pub permit_id: Option<PermitId>,
}

impl NewIncident {
    pub fn validate(&self) -> Result<()> {
        if self.title.trim().is_empty() {
            return Err(Error::Validation("title must not be empty".into()));
        }
        Ok(())
    }
}

/// Moves `incident` one step forward. `closer_is_safety_officer` feeds the
/// FATAL close rule; role-matrix checks happen before this.
pub fn advance(
    incident: &Incident,
    target: IncidentState,
    note: Option<&str>,
    by: &UserId,
    at: Timestamp,
    closer_is_safety_officer: bool,
) -> Result<Incident> {
    if incident.state.successor() != Some(target) {
        return Err(Error::IllegalTransition {
            from: incident.state.name().into(),
            event: target.name().into(),
        });
    }
    let mut next = incident.clone();
    if matches!(target, IncidentState::CorrectiveAction | IncidentState::Closed) {
        if let Some(text) = note.map(str::trim).filter(|t| !t.is_empty()) {
            next.corrective_actions.push(CorrectiveAction {
                text: text.to_owned(),
                at,
                by: by.clone(),
            });
        }
    }
    if target == IncidentState::Closed {
        if incident.severity == Severity::Fatal && !closer_is_safety_officer {
            return Err(Error::guard(
                Guard::FatalCloseBySafetyOfficer,
                "FATAL incidents are closed by a safety officer",
            ));
        }
        if incident.severity.suspends_work() && next.corrective_actions.is_empty() {
            return Err(Error::guard(
                Guard::CorrectiveActionRequired,
                "record a corrective action before closing",
            ));
        }
    }
    next.state = target;
    next.version += 1;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse;

    fn incident(severity: Severity, state: IncidentState) -> Incident {
        Incident {
            incident_id: IncidentId::from_ordinal(1),
            title: "cut hand".into(),
            description: String::new(),
            severity,
            category: IncidentCategory::Laceration,
            zone_id: "Z1".into(),
            permit_id: None,
            reported_by: UserId::from_ordinal(1),
            reported_at: parse("2026-03-01T08:00:00Z").unwrap(),
            state,
            corrective_actions: vec![],
            version: 1,
        }
    }

    #[test]
    fn forward_only() {
        let by = UserId::from_ordinal(2);
        let at = parse("2026-03-01T09:00:00Z").unwrap();
        let i = incident(Severity::Minor, IncidentState::Reported);
        let next = advance(&i, IncidentState::UnderInvestigation, None, &by, at, true).unwrap();
        assert_eq!(next.state, IncidentState::UnderInvestigation);
        assert_eq!(next.version, 2);
        assert!(matches!(
            advance(&i, IncidentState::Closed, None, &by, at, true),
            Err(Error::IllegalTransition { .. })
        ));
        assert!(advance(&next, IncidentState::Reported, None, &by, at, true).is_err());
    }

    #[test]
    fn major_close_needs_action() {
        let by = UserId::from_ordinal(2);
        let at = parse("2026-03-01T09:00:00Z").unwrap();
        let i = incident(Severity::Major, IncidentState::CorrectiveAction);
        assert!(matches!(
            advance(&i, IncidentState::Closed, None, &by, at, true),
            Err(Error::GuardViolation { guard: Guard::CorrectiveActionRequired, .. })
        ));
        let closed = advance(&i, IncidentState::Closed, Some("guard fitted"), &by, at, true).unwrap();
        assert_eq!(closed.corrective_actions.len(), 1);
        // minor incidents close without actions
        assert!(advance(&incident(Severity::Minor, IncidentState::CorrectiveAction), IncidentState::Closed, None, &by, at, false).is_ok());
    }

    #[test]
    fn fatal_close_restricted() {
        let by = UserId::from_ordinal(2);
        let at = parse("2026-03-01T09:00:00Z").unwrap();
        let i = incident(Severity::Fatal, IncidentState::CorrectiveAction);
        assert!(matches!(
            advance(&i, IncidentState::Closed, Some("x"), &by, at, false),
            Err(Error::GuardViolation { guard: Guard::FatalCloseBySafetyOfficer, .. })
        ));
    }
}
