use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{Action, DenyReason};
use crate::zones::ConflictReport;

/// Guards named in transition failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Guard {
    /// Contractor eligible at the approval instant.
    G1,
    /// Linked machine is OPERATIONAL.
    G2,
    /// No zone/time/type conflict with APPROVED or ACTIVE permits.
    G3,
    /// Validity window has not ended.
    G4,
    /// Activation falls inside the validity window (minus grace).
    G5,
    /// Every linked incident is CLOSED or in CORRECTIVE_ACTION.
    G6,
    /// HIGH-criticality machine needs maintenance before leaving OUT_OF_SERVICE.
    #[serde(rename = "MAINTENANCE_REQUIRED")]
    MaintenanceRequired,
    /// MAJOR/FATAL incidents need a corrective action before closing.
    #[serde(rename = "CORRECTIVE_ACTION_REQUIRED")]
    CorrectiveActionRequired,
    /// FATAL incidents are closed by a safety officer only.
    #[serde(rename = "FATAL_CLOSE_BY_SAFETY_OFFICER")]
    FatalCloseBySafetyOfficer,
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).expect("guard serializes");
        f.write_str(text.as_str().unwrap_or("?"))
    }
}

/// Coarse error classes; the gateway maps these onto HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Authentication,
    Permission,
    NotFound,
    Conflict,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("a user named {name:?} with that role already exists")]
    DuplicateName { name: String },
    #[error("asset code {0:?} is already registered")]
    DuplicateAssetCode(String),
    #[error("vendor code {0:?} is already registered")]
    DuplicateVendorCode(String),
    #[error("validity window must satisfy valid_from < valid_to")]
    InvalidWindow,
    #[error("certification window must satisfy valid_from <= valid_to")]
    InvalidCertWindow,
    #[error("invalid zone {zone_id}: {reason}")]
    InvalidZone { zone_id: String, reason: String },
    #[error("time range must satisfy from <= to")]
    InvalidRange,

    #[error("bad credentials")]
    BadCredentials,
    #[error("user is inactive")]
    InactiveUser,
    #[error("not authenticated: {}", .0.code())]
    Unauthenticated(DenyReason),
    #[error("role may not perform {0}")]
    Unauthorized(Action),
    #[error("the permit requester may not approve it")]
    FourEyesViolation,

    #[error("unknown {kind} {id}")]
    NotFound { kind: &'static str, id: String },

    #[error("illegal transition: {event} from {from}")]
    IllegalTransition { from: String, event: String },
    #[error("guard {guard} failed: {detail}")]
    GuardViolation {
        guard: Guard,
        detail: String,
        conflicts: Vec<ConflictReport>,
    },
    #[error("version conflict on {kind} {id}: expected {expected}, found {actual}")]
    VersionConflict {
        kind: &'static str,
        id: String,
        expected: u64,
        actual: u64,
    },
    #[error("machine is referenced by active permits {permits:?}")]
    PermitConflict { permits: Vec<String> },
    #[error("no ACTIVE permit {permit} names machine {machine}")]
    NoValidPermit { machine: String, permit: String },

    #[error("manual and digital timings cover different stages")]
    StageMismatch,
    #[error("manual baseline for {0} must be > 0")]
    ZeroBaseline(String),

    #[error("journal corrupt at seq {first_bad_seq}")]
    CorruptJournal { first_bad_seq: u64 },
    #[error("snapshot does not line up with journal: {0}")]
    SnapshotJournalGap(String),
    #[error("engine stopped after a failed commit; reload from disk")]
    Poisoned,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn not_found(kind: &'static str, id: impl fmt::Display) -> Self {
        Error::NotFound {
            kind,
            id: id.to_string(),
        }
    }

    pub fn guard(guard: Guard, detail: impl Into<String>) -> Self {
        Error::GuardViolation {
            guard,
            detail: detail.into(),
            conflicts: Vec::new(),
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "VALIDATION_ERROR",
            Error::DuplicateName { .. } => "DUPLICATE_NAME",
            Error::DuplicateAssetCode(_) => "DUPLICATE_ASSET_CODE",
            Error::DuplicateVendorCode(_) => "DUPLICATE_VENDOR_CODE",
            Error::InvalidWindow => "INVALID_WINDOW",
            Error::InvalidCertWindow => "INVALID_CERT_WINDOW",
            Error::InvalidZone { .. } => "INVALID_ZONE",
            Error::InvalidRange => "INVALID_RANGE",
            Error::BadCredentials => "BAD_CREDENTIALS",
            Error::InactiveUser => "INACTIVE_USER",
            Error::Unauthenticated(_) => "UNAUTHENTICATED",
            Error::Unauthorized(_) => "UNAUTHORIZED",
            Error::FourEyesViolation => "FOUR_EYES_VIOLATION",
            Error::NotFound { kind, .. } => match *kind {
                "zone" => "UNKNOWN_ZONE",
                "machine" => "UNKNOWN_MACHINE",
                "contractor" => "UNKNOWN_CONTRACTOR",
                "permit" => "UNKNOWN_PERMIT",
                "incident" => "UNKNOWN_INCIDENT",
                "user" => "UNKNOWN_USER",
                _ => "NOT_FOUND",
            },
            Error::IllegalTransition { .. } => "ILLEGAL_TRANSITION",
            Error::GuardViolation { .. } => "GUARD_VIOLATION",
            Error::VersionConflict { .. } => "VERSION_CONFLICT",
            Error::PermitConflict { .. } => "PERMIT_CONFLICT",
            Error::NoValidPermit { .. } => "NO_VALID_PERMIT",
            Error::StageMismatch => "STAGE_MISMATCH",
            Error::ZeroBaseline(_) => "ZERO_BASELINE",
            Error::CorruptJournal { .. } => "CORRUPT_JOURNAL",
            Error::SnapshotJournalGap(_) => "SNAPSHOT_JOURNAL_GAP",
            Error::Poisoned => "ENGINE_POISONED",
            Error::Io(_) => "IO_ERROR",
            Error::Serde(_) => "SERIALIZATION_ERROR",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Validation(_)
            | Error::DuplicateName { .. }
            | Error::DuplicateAssetCode(_)
            | Error::DuplicateVendorCode(_)
            | Error::InvalidWindow
            | Error::InvalidCertWindow
            | Error::InvalidZone { .. }
            | Error::InvalidRange
            | Error::StageMismatch
            | Error::ZeroBaseline(_) => ErrorClass::Validation,
            Error::BadCredentials | Error::InactiveUser | Error::Unauthenticated(_) => {
                ErrorClass::Authentication
            }
            Error::Unauthorized(_) | Error::FourEyesViolation => ErrorClass::Permission,
            Error::NotFound { .. } => ErrorClass::NotFound,
            Error::IllegalTransition { .. }
            | Error::GuardViolation { .. }
            | Error::VersionConflict { .. }
            | Error::PermitConflict { .. }
            | Error::NoValidPermit { .. } => ErrorClass::Conflict,
            Error::CorruptJournal { .. }
            | Error::SnapshotJournalGap(_)
            | Error::Poisoned
            | Error::Io(_)
            | Error::Serde(_) => ErrorClass::Internal,
        }
    }

    /// Structured details for API error bodies.
    pub fn details(&self) -> Option<serde_json::Value> {
        use serde_json::json;
        match self {
            Error::GuardViolation {
                guard, conflicts, ..
            } => Some(json!({ "guard": guard, "conflicts": conflicts })),
            Error::VersionConflict {
                expected, actual, ..
            } => Some(json!({ "expected": expected, "actual": actual })),
            Error::PermitConflict { permits } => Some(json!({ "permits": permits })),
            Error::IllegalTransition { from, event } => {
                Some(json!({ "from": from, "event": event }))
            }
            Error::Unauthenticated(reason) => Some(json!({ "reason": reason })),
            Error::Unauthorized(action) => Some(json!({ "action": action })),
            Error::CorruptJournal { first_bad_seq } => {
                Some(json!({ "first_bad_seq": first_bad_seq }))
            }
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
