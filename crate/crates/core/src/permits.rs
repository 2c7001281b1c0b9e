//! Permit-to-work records and the lifecycle transition table.
//!
//! ```text
//! DRAFT --SUBMIT--> SUBMITTED --APPROVE[G1-G4]--> APPROVED --ACTIVATE[G2,G5]--> ACTIVE --CLOSE[G6]--> CLOSED
//!   |                  |  \--REJECT--> REJECTED                                  |  ^
//!   +----CANCEL--------+--> CANCELLED                             SUSPEND[...]  v  | RESUME[G1-G4]
//!                                                                             SUSPENDED
//! any non-terminal state --(sweep, valid_to passed)--> EXPIRED
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::access::Action;
use crate::audit::Actor;
use crate::error::Guard;
use crate::ids::{ContractorId, MachineId, PermitId, UserId, ZoneId};
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PermitType {
    HotWork,
    Electrical,
    ConfinedSpace,
    WorkingAtHeight,
    General,
}

impl PermitType {
    pub const ALL: [PermitType; 5] = [
        PermitType::HotWork,
        PermitType::Electrical,
        PermitType::ConfinedSpace,
        PermitType::WorkingAtHeight,
        PermitType::General,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PermitState {
    Draft,
    Submitted,
    Approved,
    Active,
    Suspended,
    Closed,
    Rejected,
    Expired,
    Cancelled,
}

impl PermitState {
    pub const ALL: [PermitState; 9] = [
        PermitState::Draft,
        PermitState::Submitted,
        PermitState::Approved,
        PermitState::Active,
        PermitState::Suspended,
        PermitState::Closed,
        PermitState::Rejected,
        PermitState::Expired,
        PermitState::Cancelled,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            PermitState::Closed
                | PermitState::Rejected
                | PermitState::Expired
                | PermitState::Cancelled
        )
    }

    /// States that hold a claim on a zone and time window.
    pub fn is_live(self) -> bool {
        matches!(self, PermitState::Approved | PermitState::Active)
    }
}

impl fmt::Display for PermitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("state serializes");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PermitEvent {
    Submit,
    Approve,
    Reject,
    Activate,
    Suspend,
    Resume,
    Close,
    Cancel,
}

impl PermitEvent {
    pub const ALL: [PermitEvent; 8] = [
        PermitEvent::Submit,
        PermitEvent::Approve,
        PermitEvent::Reject,
        PermitEvent::Activate,
        PermitEvent::Suspend,
        PermitEvent::Resume,
        PermitEvent::Close,
        PermitEvent::Cancel,
    ];

    pub fn action(self) -> Action {
        match self {
            PermitEvent::Submit => Action::PermitSubmit,
            PermitEvent::Approve => Action::PermitApprove,
            PermitEvent::Reject => Action::PermitReject,
            PermitEvent::Activate => Action::PermitActivate,
            PermitEvent::Suspend => Action::PermitSuspend,
            PermitEvent::Resume => Action::PermitResume,
            PermitEvent::Close => Action::PermitClose,
            PermitEvent::Cancel => Action::PermitCancel,
        }
    }
}

impl fmt::Display for PermitEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("event serializes");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

/// The transition table. `None` is a table miss.
pub fn next_state(state: PermitState, event: PermitEvent) -> Option<PermitState> {
    use PermitEvent as E;
    use PermitState as S;
    match (state, event) {
        (S::Draft, E::Submit) => Some(S::Submitted),
        (S::Submitted, E::Approve) => Some(S::Approved),
        (S::Submitted, E::Reject) => Some(S::Rejected),
        (S::Approved, E::Activate) => Some(S::Active),
        (S::Active, E::Suspend) => Some(S::Suspended),
        (S::Suspended, E::Resume) => Some(S::Active),
        (S::Active, E::Close) => Some(S::Closed),
        (S::Draft | S::Submitted, E::Cancel) => Some(S::Cancelled),
        _ => None,
    }
}

/// Guards evaluated, in order, for a legal transition.
pub fn guards_for(event: PermitEvent) -> &'static [Guard] {
    match event {
        PermitEvent::Approve | PermitEvent::Resume => &[Guard::G1, Guard::G2, Guard::G3, Guard::G4],
        PermitEvent::Activate => &[Guard::G2, Guard::G5],
        PermitEvent::Close => &[Guard::G6],
        _ => &[],
    }
}

/// What caused a recorded state change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HistoryEvent {
    Submit,
    Approve,
    Reject,
    Activate,
    Suspend,
    Resume,
    Close,
    Cancel,
    Expire,
}

impl From<PermitEvent> for HistoryEvent {
    fn from(e: PermitEvent) -> Self {
        match e {
            PermitEvent::Submit => HistoryEvent::Submit,
            PermitEvent::Approve => HistoryEvent::Approve,
            PermitEvent::Reject => HistoryEvent::Reject,
            PermitEvent::Activate => HistoryEvent::Activate,
            PermitEvent::Suspend => HistoryEvent::Suspend,
            PermitEvent::Resume => HistoryEvent::Resume,
            PermitEvent::Close => HistoryEvent::Close,
            PermitEvent::Cancel => HistoryEvent::Cancel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub from: PermitState,
    pub to: PermitState,
    pub event: HistoryEvent,
    pub actor: Actor,
    #[serde(with = "serde_millis")]
    pub at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permit {
    pub permit_id: PermitId,
    pub permit_type: PermitType,
    pub requester_id: UserId,
    pub contractor_id: Option<ContractorId>,
    pub machine_id: Option<MachineId>,
    pub zone_id: ZoneId,
    pub description: String,
    #[serde(with = "serde_millis")]
    pub valid_from: Timestamp,
    #[serde(with = "serde_millis")]
    pub valid_to: Timestamp,
    pub state: PermitState,
    pub state_history: Vec<StateChange>,
    pub version: u64,
}

impl Permit {
    /// Folds the history from DRAFT; `None` if the history is not a chain.
    pub fn replay_state(&self) -> Option<PermitState> {
        self.state_history
            .iter()
            .try_fold(PermitState::Draft, |state, change| {
                (change.from == state).then_some(change.to)
            })
    }

    /// The user who moved the permit to SUBMITTED, if any.
    pub fn submitted_by(&self) -> Option<&UserId> {
        self.state_history
            .iter()
            .rev()
            .find(|c| c.event == HistoryEvent::Submit)
            .and_then(|c| c.actor.user_id())
    }

    pub(crate) fn record(&mut self, to: PermitState, event: HistoryEvent, actor: Actor, at: Timestamp, reason: Option<String>) {
        self.state_history.push(StateChange {
            from: self.state,
            to,
            event,
            actor,
            at,
            reason,
        });
        self.state = to;
        self.version += 1;
    }
}

/// Input to `create_draft`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermitRequest {
    pub permit_type: PermitType,
    pub zone_id: ZoneId,
    #[serde(default)]
    pub machine_id: Option<MachineId>,
    #[serde(default)]
    pub contractor_id: Option<ContractorId>,
    #[serde(with = "serde_millis")]
    pub valid_from: Timestamp,
    #[serde(with = "serde_millis")]
    pub valid_to: Timestamp,
    #[serde(default)]
    pub description: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_states_have_no_exits() {
        for state in PermitState::ALL.into_iter().filter(|s| s.is_terminal()) {
            for event in PermitEvent::ALL {
                assert_eq!(next_state(state, event), None, "{state} {event}");
            }
        }
    }

    #[test]
    fn table_has_eight_edges() {
        let edges = PermitState::ALL
            .iter()
            .flat_map(|s| PermitEvent::ALL.iter().map(move |e| (*s, *e)))
            .filter(|(s, e)| next_state(*s, *e).is_some())
            .count();
        assert_eq!(edges, 9); // CANCEL has two sources
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&PermitType::WorkingAtHeight).unwrap(), "\"WORKING_AT_HEIGHT\"");
        assert_eq!(PermitState::Cancelled.to_string(), "CANCELLED");
        assert_eq!(PermitEvent::Approve.to_string(), "APPROVE");
    }
}
