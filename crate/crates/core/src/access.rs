//! Users, roles, sessions and the static permission matrix.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::UserId;
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Admin,
    Supervisor,
    SafetyOfficer,
    Engineer,
    Technician,
    Contractor,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Admin,
        Role::Supervisor,
        Role::SafetyOfficer,
        Role::Engineer,
        Role::Technician,
        Role::Contractor,
    ];
}

/// Every permission-checked action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "permit.submit")]
    PermitSubmit,
    #[serde(rename = "permit.approve")]
    PermitApprove,
    #[serde(rename = "permit.reject")]
    PermitReject,
    #[serde(rename = "permit.activate")]
    PermitActivate,
    #[serde(rename = "permit.close")]
    PermitClose,
    #[serde(rename = "permit.suspend")]
    PermitSuspend,
    #[serde(rename = "permit.resume")]
    PermitResume,
    #[serde(rename = "permit.cancel")]
    PermitCancel,
    #[serde(rename = "incident.report")]
    IncidentReport,
    #[serde(rename = "incident.investigate")]
    IncidentInvestigate,
    #[serde(rename = "incident.close")]
    IncidentClose,
    #[serde(rename = "machine.register")]
    MachineRegister,
    #[serde(rename = "machine.update")]
    MachineUpdate,
    #[serde(rename = "machine.fault_report")]
    MachineFaultReport,
    #[serde(rename = "machine.operate")]
    MachineOperate,
    #[serde(rename = "contract.register")]
    ContractRegister,
    #[serde(rename = "contract.approve")]
    ContractApprove,
    #[serde(rename = "reports.view")]
    ReportsView,
    #[serde(rename = "user.manage")]
    UserManage,
    #[serde(rename = "zones.manage")]
    ZonesManage,
}

impl Action {
    pub const ALL: [Action; 20] = [
        Action::PermitSubmit,
        Action::PermitApprove,
        Action::PermitReject,
        Action::PermitActivate,
        Action::PermitClose,
        Action::PermitSuspend,
        Action::PermitResume,
        Action::PermitCancel,
        Action::IncidentReport,
        Action::IncidentInvestigate,
        Action::IncidentClose,
        Action::MachineRegister,
        Action::MachineUpdate,
        Action::MachineFaultReport,
        Action::MachineOperate,
        Action::ContractRegister,
        Action::ContractApprove,
        Action::ReportsView,
        Action::UserManage,
        Action::ZonesManage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Action::PermitSubmit => "permit.submit",
            Action::PermitApprove => "permit.approve",
            Action::PermitReject => "permit.reject",
            Action::PermitActivate => "permit.activate",
            Action::PermitClose => "permit.close",
            Action::PermitSuspend => "permit.suspend",
            Action::PermitResume => "permit.resume",
            Action::PermitCancel => "permit.cancel",
            Action::IncidentReport => "incident.report",
            Action::IncidentInvestigate => "incident.investigate",
            Action::IncidentClose => "incident.close",
            Action::MachineRegister => "machine.register",
            Action::MachineUpdate => "machine.update",
            Action::MachineFaultReport => "machine.fault_report",
            Action::MachineOperate => "machine.operate",
            Action::ContractRegister => "contract.register",
            Action::ContractApprove => "contract.approve",
            Action::ReportsView => "reports.view",
            Action::UserManage => "user.manage",
            Action::ZonesManage => "zones.manage",
        }
    }

    /// Roles other than ADMIN that may perform this action. ADMIN may do everything.
    pub fn allowed_roles(self) -> &'static [Role] {
        use Role::*;
        match self {
            Action::PermitSubmit => &[Technician, Engineer, Contractor, Supervisor],
            Action::PermitApprove | Action::PermitReject => &[Supervisor, SafetyOfficer],
            Action::PermitActivate | Action::PermitClose => &[Supervisor],
            Action::PermitSuspend | Action::PermitResume => &[Supervisor, SafetyOfficer],
            Action::PermitCancel => &[Supervisor],
            Action::IncidentReport | Action::MachineFaultReport => {
                &[Supervisor, SafetyOfficer, Engineer, Technician, Contractor]
            }
            Action::IncidentInvestigate | Action::IncidentClose => &[SafetyOfficer],
            Action::MachineRegister | Action::MachineUpdate => &[Engineer, Supervisor],
            Action::MachineOperate => &[Technician, Engineer, Contractor, Supervisor],
            Action::ContractRegister => &[],
            Action::ContractApprove => &[Supervisor, SafetyOfficer],
            Action::ReportsView => &[Supervisor, SafetyOfficer],
            Action::UserManage | Action::ZonesManage => &[],
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The permission matrix lookup.
pub fn role_permits(role: Role, action: Action) -> bool {
    role == Role::Admin || action.allowed_roles().contains(&role)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
    pub name: String,
    pub role: Role,
    pub active: bool,
    pub credential_hash: CredentialHash,
}

/// Salted one-way credential digest, stored as `salt_hex$sha256_hex`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CredentialHash(String);

impl CredentialHash {
    pub fn derive(credential: &str, rng: &mut impl RngCore) -> Self {
        let mut salt = [0u8; 16];
        rng.fill_bytes(&mut salt);
        Self::with_salt(credential, &salt)
    }

    fn with_salt(credential: &str, salt: &[u8]) -> Self {
        let digest = Sha256::new()
            .chain_update(salt)
            .chain_update(credential.as_bytes())
            .finalize();
        Self(format!("{}${}", hex::encode(salt), hex::encode(digest)))
    }

    pub fn matches(&self, credential: &str) -> bool {
        let Some((salt_hex, _)) = self.0.split_once('$') else {
            return false;
        };
        let Ok(salt) = hex::decode(salt_hex) else {
            return false;
        };
        Self::with_salt(credential, &salt) == *self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user_id: UserId,
    #[serde(with = "serde_millis")]
    pub issued_at: Timestamp,
    #[serde(with = "serde_millis")]
    pub expires_at: Timestamp,
}

impl Session {
    pub fn is_expired(&self, now: Timestamp) -> bool {
        now >= self.expires_at
    }
}

/// Mints a 256-bit hex bearer token.
pub fn new_token(rng: &mut impl RngCore) -> String {
    let mut bytes = [0u8; 32];
    rng.fill_bytes(&mut bytes);
    hex::encode(bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DenyReason {
    UnknownSession,
    SessionExpired,
    UserInactive,
    RoleNotPermitted,
}

impl DenyReason {
    pub fn code(self) -> &'static str {
        match self {
            DenyReason::UnknownSession => "UNKNOWN_SESSION",
            DenyReason::SessionExpired => "SESSION_EXPIRED",
            DenyReason::UserInactive => "USER_INACTIVE",
            DenyReason::RoleNotPermitted => "ROLE_NOT_PERMITTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub allow: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<DenyReason>,
}

impl Decision {
    pub const ALLOW: Decision = Decision {
        allow: true,
        reason: None,
    };

    pub fn deny(reason: DenyReason) -> Self {
        Decision {
            allow: false,
            reason: Some(reason),
        }
    }
}

/// Pure authorization over an already-resolved session.
///
/// `stored` is the server-side copy of the session (if the token is known)
/// and `user` its owner.
pub fn decide(
    stored: Option<&Session>,
    user: Option<&User>,
    action: Action,
    now: Timestamp,
) -> Decision {
    let (Some(session), Some(user)) = (stored, user) else {
        return Decision::deny(DenyReason::UnknownSession);
    };
    if session.is_expired(now) {
        return Decision::deny(DenyReason::SessionExpired);
    }
    if !user.active {
        return Decision::deny(DenyReason::UserInactive);
    }
    if role_permits(user.role, action) {
        Decision::ALLOW
    } else {
        Decision::deny(DenyReason::RoleNotPermitted)
    }
}

#[cfg(test)]
mod tests {
    use chrono::Duration;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::time::parse;

    #[test]
    fn every_action_has_a_non_admin_or_admin_role_and_admin_has_all() {
        for action in Action::ALL {
            assert!(Role::ALL.iter().any(|r| role_permits(*r, action)));
            assert!(role_permits(Role::Admin, action));
        }
    }

    #[test]
    fn matrix_rows() {
        assert!(role_permits(Role::SafetyOfficer, Action::PermitApprove));
        assert!(!role_permits(Role::Contractor, Action::PermitApprove));
        assert!(!role_permits(Role::SafetyOfficer, Action::PermitActivate));
        assert!(role_permits(Role::Contractor, Action::IncidentReport));
        assert!(!role_permits(Role::Supervisor, Action::ContractRegister));
        assert!(!role_permits(Role::Technician, Action::ReportsView));
    }

    #[test]
    fn action_names_match_serde() {
        for action in Action::ALL {
            let json = serde_json::to_string(&action).unwrap();
            assert_eq!(json, format!("\"{}\"", action.name()));
        }
    }

    #[test]
    fn credential_hash_is_salted_and_verifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = CredentialHash::derive("hunter2", &mut rng);
        let b = CredentialHash::derive("hunter2", &mut rng);
        assert_ne!(a, b);
        assert!(a.matches("hunter2"));
        assert!(!a.matches("hunter3"));
        assert!(!a.0.contains("hunter2"));
    }

    #[test]
    fn expired_session_denies_everything() {
        let now = parse("2026-03-01T08:00:00Z").unwrap();
        let user = User {
            user_id: UserId::from_ordinal(1),
            name: "x".into(),
            role: Role::Admin,
            active: true,
            credential_hash: CredentialHash("00$00".into()),
        };
        let session = Session {
            token: "t".into(),
            user_id: user.user_id.clone(),
            issued_at: now - Duration::hours(9),
            expires_at: now - Duration::hours(1),
        };
        for action in Action::ALL {
            assert_eq!(
                decide(Some(&session), Some(&user), action, now),
                Decision::deny(DenyReason::SessionExpired)
            );
        }
        assert_eq!(
            decide(None, None, Action::ReportsView, now).reason,
            Some(DenyReason::UnknownSession)
        );
    }
}
