//! Contractor registry, approval lifecycle and eligibility.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::ContractorId;
use crate::permits::PermitType;
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ApprovalStatus {
    Pending,
    Approved,
    Suspended,
    Revoked,
}

impl ApprovalStatus {
    pub const ALL: [ApprovalStatus; 4] = [
        ApprovalStatus::Pending,
        ApprovalStatus::Approved,
        ApprovalStatus::Suspended,
        ApprovalStatus::Revoked,
    ];

    pub fn can_become(self, to: ApprovalStatus) -> bool {
        use ApprovalStatus::*;
        matches!(
            (self, to),
            (Pending, Approved | Revoked) | (Approved, Suspended | Revoked) | (Suspended, Approved | Revoked)
        )
    }
}

/// Certificate validity, inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certification {
    pub cert_id: String,
    pub valid_from: NaiveDate,
    pub valid_to: NaiveDate,
}

impl Certification {
    pub fn covers(&self, at: Timestamp) -> bool {
        let day = at.date_naive();
        self.valid_from <= day && day <= self.valid_to
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contractor {
    pub contractor_id: ContractorId,
    pub vendor_code: String,
    pub name: String,
    pub work_categories: BTreeSet<PermitType>,
    pub certification: Certification,
    pub safety_rating: u8,
    pub approval_status: ApprovalStatus,
    pub workforce_size: u32,
    #[serde(with = "serde_millis")]
    pub registered_at: Timestamp,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewContractor {
    pub vendor_code: String,
    pub name: String,
    pub work_categories: BTreeSet<PermitType>,
    pub certification: Certification,
    pub safety_rating: u8,
    #[serde(default)]
    pub workforce_size: u32,
}

impl NewContractor {
    pub fn validate(&self) -> Result<()> {
        if self.vendor_code.trim().is_empty() {
            return Err(Error::Validation("vendor_code must not be empty".into()));
        }
        if self.name.trim().is_empty() {
            return Err(Error::Validation("name must not be empty".into()));
        }
        if !(1..=5).contains(&self.safety_rating) {
            return Err(Error::Validation(format!(
                "safety_rating must be in 1..=5, got {}",
                self.safety_rating
            )));
        }
        if self.certification.valid_to < self.certification.valid_from {
            return Err(Error::InvalidCertWindow);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Ineligibility {
    NotApproved,
    CategoryMismatch,
    CertNotYetValid,
    CertExpired,
    RatingBelowMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eligibility {
    pub eligible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<Ineligibility>,
}

impl Eligibility {
    const ELIGIBLE: Eligibility = Eligibility {
        eligible: true,
        reason: None,
    };

    fn no(reason: Ineligibility) -> Self {
        Eligibility {
            eligible: false,
            reason: Some(reason),
        }
    }
}

/// Eligible iff APPROVED, the type is one of its categories and the
/// certificate covers `at`. `min_rating` is an optional extra gate.
pub fn check_eligibility(
    contractor: &Contractor,
    permit_type: PermitType,
    at: Timestamp,
    min_rating: Option<u8>,
) -> Eligibility {
    if contractor.approval_status != ApprovalStatus::Approved {
        return Eligibility::no(Ineligibility::NotApproved);
    }
    if !contractor.work_categories.contains(&permit_type) {
        return Eligibility::no(Ineligibility::CategoryMismatch);
    }
    let day = at.date_naive();
    if day < contractor.certification.valid_from {
        return Eligibility::no(Ineligibility::CertNotYetValid);
    }
    if day > contractor.certification.valid_to {
        return Eligibility::no(Ineligibility::CertExpired);
    }
    if min_rating.is_some_and(|min| contractor.safety_rating < min) {
        return Eligibility::no(Ineligibility::RatingBelowMinimum);
    }
    Eligibility::ELIGIBLE
}

/// APPROVED with a certificate valid at `at`.
pub fn is_available(contractor: &Contractor, at: Timestamp) -> bool {
    contractor.approval_status == ApprovalStatus::Approved && contractor.certification.covers(at)
}
