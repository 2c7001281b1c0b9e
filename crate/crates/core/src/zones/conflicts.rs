use serde::{Deserialize, Serialize};

use super::{ZoneKind, ZoneLayout};
use crate::ids::{PermitId, ZoneId};
use crate::permits::{PermitState, PermitType};
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleScope {
    /// Zones overlap (same zone included).
    Overlap,
    /// Both permits name the same zone id.
    SameZone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRule {
    pub rule: String,
    pub a: PermitType,
    pub b: PermitType,
    pub scope: RuleScope,
}

impl PairRule {
    fn new(rule: &str, a: PermitType, b: PermitType, scope: RuleScope) -> Self {
        Self {
            rule: rule.into(),
            a,
            b,
            scope,
        }
    }

    fn matches(&self, x: PermitType, y: PermitType) -> bool {
        (self.a == x && self.b == y) || (self.a == y && self.b == x)
    }
}

/// Symmetric relation over permit types. Pair rules are tried in order; the
/// storage rule (hot work against anything in a STORAGE_AREA) comes last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictMatrix {
    pub pairs: Vec<PairRule>,
    /// Rule name for hot work near storage, `None` to disable.
    #[serde(default)]
    pub hot_work_storage: Option<String>,
}

impl Default for ConflictMatrix {
    fn default() -> Self {
        use PermitType::*;
        Self {
            pairs: vec![
                PairRule::new("HOT_HOT", HotWork, HotWork, RuleScope::Overlap),
                PairRule::new("HOT_CONFINED", HotWork, ConfinedSpace, RuleScope::Overlap),
                PairRule::new("ELECTRICAL_CONFINED", Electrical, ConfinedSpace, RuleScope::Overlap),
                PairRule::new("HEIGHT_HEIGHT", WorkingAtHeight, WorkingAtHeight, RuleScope::SameZone),
            ],
            hot_work_storage: Some("HOT_STORAGE".into()),
        }
    }
}

/// One side of a conflict check.
#[derive(Debug, Clone, Copy)]
pub struct Placement<'a> {
    pub permit_type: PermitType,
    pub zone_id: &'a ZoneId,
    pub zone_kind: Option<ZoneKind>,
}

impl ConflictMatrix {
    /// The first rule that makes `x` and `y` incompatible, if any.
    pub fn rule_for(&self, x: Placement<'_>, y: Placement<'_>, zones_overlap: bool) -> Option<&str> {
        for pair in &self.pairs {
            if !pair.matches(x.permit_type, y.permit_type) {
                continue;
            }
            let spatial = match pair.scope {
                RuleScope::Overlap => zones_overlap,
                RuleScope::SameZone => x.zone_id == y.zone_id,
            };
            if spatial {
                return Some(&pair.rule);
            }
        }
        let storage = |p: Placement<'_>| p.zone_kind == Some(ZoneKind::StorageArea);
        match &self.hot_work_storage {
            Some(rule)
                if zones_overlap
                    && ((x.permit_type == PermitType::HotWork && storage(y))
                        || (y.permit_type == PermitType::HotWork && storage(x))) =>
            {
                Some(rule)
            }
            _ => None,
        }
    }
}

/// Closed-interval intersection of two validity windows.
pub fn windows_intersect(a: (Timestamp, Timestamp), b: (Timestamp, Timestamp)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// A permit being considered (not yet holding a claim).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermitRequestView {
    pub permit_type: PermitType,
    pub zone_id: ZoneId,
    #[serde(with = "serde_millis")]
    pub valid_from: Timestamp,
    #[serde(with = "serde_millis")]
    pub valid_to: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermitView {
    pub permit_id: PermitId,
    pub permit_type: PermitType,
    pub zone_id: ZoneId,
    #[serde(with = "serde_millis")]
    pub valid_from: Timestamp,
    #[serde(with = "serde_millis")]
    pub valid_to: Timestamp,
    pub state: PermitState,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConflictReport {
    pub permit_id: PermitId,
    pub rule: String,
}

pub fn permit_conflicts(
    layout: &ZoneLayout,
    candidate: &PermitRequestView,
    others: &[PermitView],
) -> Vec<ConflictReport> {
    let kind = |id: &ZoneId| layout.get(id).map(|z| z.kind());
    let mine = Placement {
        permit_type: candidate.permit_type,
        zone_id: &candidate.zone_id,
        zone_kind: kind(&candidate.zone_id),
    };
    let mut reports: Vec<ConflictReport> = others
        .iter()
        .filter(|o| o.state.is_live())
        .filter(|o| windows_intersect((candidate.valid_from, candidate.valid_to), (o.valid_from, o.valid_to)))
        .filter_map(|o| {
            let theirs = Placement {
                permit_type: o.permit_type,
                zone_id: &o.zone_id,
                zone_kind: kind(&o.zone_id),
            };
            let overlap = layout.overlap(&candidate.zone_id, &o.zone_id);
            layout
                .matrix()
                .rule_for(mine, theirs, overlap)
                .map(|rule| ConflictReport {
                    permit_id: o.permit_id.clone(),
                    rule: rule.to_owned(),
                })
        })
        .collect();
    reports.sort();
    reports.dedup_by(|a, b| a.permit_id == b.permit_id);
    reports
}
