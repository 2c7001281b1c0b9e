//! Workshop zones: polygon layout, containment and overlap, and the permit
//! conflict matrix used for location-based authorization.

mod conflicts;
pub mod geometry;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use conflicts::{
    permit_conflicts, windows_intersect, ConflictMatrix, ConflictReport, PairRule, Placement,
    PermitRequestView, PermitView, RuleScope,
};
pub use geometry::Point;

use crate::error::{Error, Result};
use crate::ids::ZoneId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ZoneKind {
    MachineShed,
    MaintenanceBay,
    StorageArea,
    AdminSection,
}

/// A validated, counterclockwise zone polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZoneSpec", into = "ZoneSpec")]
pub struct Zone {
    zone_id: ZoneId,
    name: String,
    kind: ZoneKind,
    polygon: Vec<Point>,
}

/// Unvalidated zone as it appears in a layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub zone_id: ZoneId,
    pub name: String,
    pub kind: ZoneKind,
    pub polygon: Vec<Point>,
}

impl Zone {
    pub fn new(zone_id: ZoneId, name: impl Into<String>, kind: ZoneKind, polygon: Vec<Point>) -> Result<Self> {
        let polygon = geometry::normalize_ring(polygon).map_err(|defect| Error::InvalidZone {
            zone_id: zone_id.to_string(),
            reason: defect.to_string(),
        })?;
        Ok(Self {
            zone_id,
            name: name.into(),
            kind,
            polygon,
        })
    }

    pub fn zone_id(&self) -> &ZoneId {
        &self.zone_id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ZoneKind {
        self.kind
    }

    pub fn polygon(&self) -> &[Point] {
        &self.polygon
    }

    pub fn contains(&self, p: Point) -> bool {
        geometry::contains_point(&self.polygon, p)
    }
}

impl TryFrom<ZoneSpec> for Zone {
    type Error = Error;

    fn try_from(spec: ZoneSpec) -> Result<Self> {
        Zone::new(spec.zone_id, spec.name, spec.kind, spec.polygon)
    }
}

impl From<Zone> for ZoneSpec {
    fn from(z: Zone) -> Self {
        ZoneSpec {
            zone_id: z.zone_id,
            name: z.name,
            kind: z.kind,
            polygon: z.polygon,
        }
    }
}

/// Boundary-inclusive point containment.
pub fn point_in_zone(p: Point, zone: &Zone) -> Result<bool> {
    if !p.is_finite() {
        return Err(Error::Validation("point coordinates must be finite".into()));
    }
    Ok(zone.contains(p))
}

/// Overlap with a safety bias: touching at a single point counts.
pub fn zones_overlap(a: &Zone, b: &Zone) -> bool {
    geometry::rings_overlap(&a.polygon, &b.polygon)
}

/// The full zone set plus conflict matrix, with pairwise overlap precomputed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneLayout {
    zones: BTreeMap<ZoneId, Zone>,
    matrix: ConflictMatrix,
    overlapping: BTreeSet<(ZoneId, ZoneId)>,
}

/// On-disk layout document: `{zones: [...], conflict_matrix?: {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub zones: Vec<Zone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict_matrix: Option<ConflictMatrix>,
}

impl ZoneLayout {
    pub fn new(zones: Vec<Zone>, matrix: ConflictMatrix) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for zone in zones {
            let id = zone.zone_id.clone();
            if by_id.insert(id.clone(), zone).is_some() {
                return Err(Error::InvalidZone {
                    zone_id: id.to_string(),
                    reason: "duplicate zone id".into(),
                });
            }
        }
        let mut overlapping = BTreeSet::new();
        let list: Vec<&Zone> = by_id.values().collect();
        for (i, a) in list.iter().enumerate() {
            for b in &list[i..] {
                if zones_overlap(a, b) {
                    overlapping.insert((a.zone_id.clone(), b.zone_id.clone()));
                    overlapping.insert((b.zone_id.clone(), a.zone_id.clone()));
                }
            }
        }
        Ok(Self {
            zones: by_id,
            matrix,
            overlapping,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LayoutFile = serde_json::from_str(text).map_err(|e| Error::InvalidZone {
            zone_id: "-".into(),
            reason: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn from_file(file: LayoutFile) -> Result<Self> {
        Self::new(file.zones, file.conflict_matrix.unwrap_or_default())
    }

    pub fn to_file(&self) -> LayoutFile {
        LayoutFile {
            zones: self.zones.values().cloned().collect(),
            conflict_matrix: Some(self.matrix.clone()),
        }
    }

    pub fn get(&self, id: &ZoneId) -> Option<&Zone> {
        self.zones.get(id)
    }

    pub fn contains_zone(&self, id: &ZoneId) -> bool {
        self.zones.contains_key(id)
    }

    pub fn zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.values()
    }

    pub fn matrix(&self) -> &ConflictMatrix {
        &self.matrix
    }

    /// Precomputed [`zones_overlap`]; unknown ids never overlap.
    pub fn overlap(&self, a: &ZoneId, b: &ZoneId) -> bool {
        self.overlapping.contains(&(a.clone(), b.clone()))
    }

    /// Conflicts of `candidate` against the APPROVED/ACTIVE members of `others`.
    pub fn permit_conflicts(&self, candidate: &PermitRequestView, others: &[PermitView]) -> Vec<ConflictReport> {
        permit_conflicts(self, candidate, others)
    }
}

impl Serialize for ZoneLayout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ZoneLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = LayoutFile::deserialize(d)?;
        ZoneLayout::from_file(file).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(id: &str, kind: ZoneKind, x0: f64, y0: f64, x1: f64, y1: f64) -> Zone {
        Zone::new(
            ZoneId::from(id),
            id,
            kind,
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn point_in_zone_examples() {
        let z = square("Z1", ZoneKind::MachineShed, 0.0, 0.0, 10.0, 10.0);
        assert!(point_in_zone(Point::new(5.0, 5.0), &z).unwrap());
        assert!(point_in_zone(Point::new(10.0, 5.0), &z).unwrap());
        assert!(point_in_zone(Point::new(f64::INFINITY, 5.0), &z).is_err());
    }

    #[test]
    fn layout_file_parses_and_rejects_duplicates() {
        let text = r#"{"zones":[
            {"zone_id":"Z1","name":"Shed","kind":"MACHINE_SHED","polygon":[[0,0],[10,0],[10,10],[0,10]]},
            {"zone_id":"Z2","name":"Store","kind":"STORAGE_AREA","polygon":[[10,0],[20,0],[20,10],[10,10]]}
        ]}"#;
        let layout = ZoneLayout::from_json(text).unwrap();
        assert!(layout.overlap(&"Z1".into(), &"Z2".into()));
        assert!(layout.overlap(&"Z1".into(), &"Z1".into()));

        let dup = r#"{"zones":[
            {"zone_id":"Z1","name":"a","kind":"MACHINE_SHED","polygon":[[0,0],[1,0],[1,1]]},
            {"zone_id":"Z1","name":"b","kind":"MACHINE_SHED","polygon":[[0,0],[1,0],[1,1]]}
        ]}"#;
        assert!(matches!(ZoneLayout::from_json(dup), Err(Error::InvalidZone { .. })));

        let degenerate = r#"{"zones":[{"zone_id":"Z9","name":"x","kind":"ADMIN_SECTION","polygon":[[0,0],[1,1]]}]}"#;
        assert!(matches!(ZoneLayout::from_json(degenerate), Err(Error::InvalidZone { .. })));
    }

    #[test]
    fn layout_serde_round_trip() {
        let layout = ZoneLayout::new(
            vec![square("A", ZoneKind::AdminSection, 0.0, 0.0, 1.0, 1.0)],
            ConflictMatrix::default(),
        )
        .unwrap();
        let json = serde_json::to_string(&layout).unwrap();
        let back: ZoneLayout = serde_json::from_str(&json).unwrap();
        assert_eq!(back, layout);
    }
}
