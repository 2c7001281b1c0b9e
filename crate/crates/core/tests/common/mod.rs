//! Shared fixtures, independent oracles and a random operation driver.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use railshop_core::time::parse;
use railshop_core::zones::{ConflictMatrix, PermitRequestView};
use railshop_core::*;

pub const CREDENTIAL: &str = "correct horse";

pub fn t0() -> Timestamp {
    parse("2026-03-02T08:00:00Z").unwrap()
}

pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
    vec![pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)]
}

pub fn zone(id: &str, kind: ZoneKind, ring: Vec<Point>) -> Zone {
    Zone::new(ZoneId::from(id), format!("zone {id}"), kind, ring).unwrap()
}

/// Z1 shed, Z2 bay (disjoint from Z1), Z3 storage overlapping Z1, Z4 admin
/// and Z5 shed, both isolated.
pub fn layout() -> ZoneLayout {
    ZoneLayout::new(
        vec![
            zone("Z1", ZoneKind::MachineShed, rect(0.0, 0.0, 20.0, 20.0)),
            zone("Z2", ZoneKind::MaintenanceBay, rect(25.0, 0.0, 45.0, 20.0)),
            zone("Z3", ZoneKind::StorageArea, rect(10.0, 15.0, 22.0, 30.0)),
            zone("Z4", ZoneKind::AdminSection, rect(50.0, 0.0, 60.0, 10.0)),
            zone("Z5", ZoneKind::MachineShed, rect(0.0, 40.0, 20.0, 60.0)),
        ],
        ConflictMatrix::default(),
    )
    .unwrap()
}

pub fn zone_ids() -> Vec<ZoneId> {
    ["Z1", "Z2", "Z3", "Z4", "Z5"].into_iter().map(ZoneId::from).collect()
}

pub const ROLE_NAMES: [(Role, &str); 6] = [
    (Role::Admin, "admin"),
    (Role::Supervisor, "sup"),
    (Role::SafetyOfficer, "so"),
    (Role::Engineer, "eng"),
    (Role::Technician, "tech"),
    (Role::Contractor, "ctr"),
];

/// An engine with one logged-in user per role, a dedicated requester, the
/// test layout, and a manual clock at [`t0`].
pub struct World {
    pub clock: ManualClock,
    pub engine: Engine,
    pub tokens: BTreeMap<Role, String>,
    pub users: BTreeMap<Role, User>,
    /// A technician who is none of the role actors.
    pub requester: String,
    pub requester_id: UserId,
}

/// Seeded config; sessions outlive the multi-day random traces.
pub fn config(seed: u64) -> EngineConfig {
    EngineConfig {
        seed: Some(seed),
        session_ttl: Duration::days(3650),
        ..EngineConfig::default()
    }
}

impl World {
    pub fn new() -> Self {
        let clock = ManualClock::new(t0());
        let engine = Engine::in_memory(Arc::new(clock.clone()), config(7));
        Self::populate(clock, engine)
    }

    /// Builds users, zones and logins on an empty engine.
    pub fn populate(clock: ManualClock, engine: Engine) -> Self {
        engine.bootstrap_admin("admin", CREDENTIAL).unwrap();
        let admin = engine.login("admin", CREDENTIAL).unwrap().token;
        engine.load_zones(&admin, layout()).unwrap();
        let mut tokens = BTreeMap::new();
        let mut users = BTreeMap::new();
        for (role, name) in ROLE_NAMES {
            let user = if role == Role::Admin {
                engine.users().into_iter().find(|u| u.name == "admin").unwrap()
            } else {
                engine.create_user(&admin, name, role, CREDENTIAL).unwrap()
            };
            tokens.insert(role, engine.login(name, CREDENTIAL).unwrap().token);
            users.insert(role, user);
        }
        let req = engine.create_user(&admin, "requester", Role::Technician, CREDENTIAL).unwrap();
        let requester = engine.login("requester", CREDENTIAL).unwrap().token;
        Self {
            clock,
            engine,
            tokens,
            users,
            requester,
            requester_id: req.user_id,
        }
    }

    pub fn token(&self, role: Role) -> &str {
        &self.tokens[&role]
    }

    pub fn request(&self, permit_type: PermitType, zone: &str, from: Timestamp, to: Timestamp) -> PermitRequest {
        PermitRequest {
            permit_type,
            zone_id: zone.into(),
            machine_id: None,
            contractor_id: None,
            valid_from: from,
            valid_to: to,
            description: "test work".into(),
        }
    }

    pub fn draft(&self, permit_type: PermitType, zone: &str) -> Permit {
        let now = self.clock.now();
        self.engine
            .create_draft(
                &self.requester,
                self.request(permit_type, zone, now - Duration::hours(1), now + Duration::hours(8)),
            )
            .unwrap()
    }

    pub fn fire(&self, role: Role, permit: &Permit, event: PermitEvent) -> Result<Permit> {
        let token = if role == Role::Technician && event == PermitEvent::Submit {
            &self.requester
        } else {
            self.token(role)
        };
        self.engine.transition(token, &permit.permit_id, event, permit.version, None)
    }

    /// Drives a fresh GENERAL permit in `zone` to `state` along the shortest path.
    pub fn permit_in(&self, state: PermitState, zone: &str) -> Permit {
        use PermitEvent as E;
        use PermitState as S;
        if state == S::Expired {
            let now = self.clock.now();
            let p = self
                .engine
                .create_draft(
                    &self.requester,
                    self.request(PermitType::General, zone, now - Duration::hours(2), now - Duration::hours(1)),
                )
                .unwrap();
            self.engine.expire_sweep().unwrap();
            return self.engine.permit(&p.permit_id).unwrap();
        }
        let path: &[(Role, E)] = match state {
            S::Draft => &[],
            S::Submitted => &[(Role::Technician, E::Submit)],
            S::Approved => &[(Role::Technician, E::Submit), (Role::SafetyOfficer, E::Approve)],
            S::Active => &[
                (Role::Technician, E::Submit),
                (Role::SafetyOfficer, E::Approve),
                (Role::Supervisor, E::Activate),
            ],
            S::Suspended => &[
                (Role::Technician, E::Submit),
                (Role::SafetyOfficer, E::Approve),
                (Role::Supervisor, E::Activate),
                (Role::SafetyOfficer, E::Suspend),
            ],
            S::Closed => &[
                (Role::Technician, E::Submit),
                (Role::SafetyOfficer, E::Approve),
                (Role::Supervisor, E::Activate),
                (Role::Supervisor, E::Close),
            ],
            S::Rejected => &[(Role::Technician, E::Submit), (Role::SafetyOfficer, E::Reject)],
            S::Cancelled => &[(Role::Supervisor, E::Cancel)],
            S::Expired => unreachable!(),
        };
        let mut p = self.draft(PermitType::General, zone);
        for (role, event) in path {
            p = self.fire(*role, &p, *event).unwrap();
        }
        assert_eq!(p.state, state);
        p
    }

    pub fn machine(&self, asset: &str, zone: &str, criticality: Criticality) -> MachinePlant {
        self.engine
            .register_machine(
                self.token(Role::Engineer),
                NewMachine {
                    asset_code: asset.into(),
                    manufacture: Manufacture {
                        maker: "HMT".into(),
                        year: 2009,
                    },
                    classification: "heavy lathe".into(),
                    criticality,
                    zone_id: zone.into(),
                },
            )
            .unwrap()
    }

    pub fn contractor(&self, vendor: &str, categories: &[PermitType], valid_to: NaiveDate, approve: bool) -> Contractor {
        let c = self
            .engine
            .register_contractor(
                self.token(Role::Admin),
                NewContractor {
                    vendor_code: vendor.into(),
                    name: format!("{vendor} works"),
                    work_categories: categories.iter().copied().collect(),
                    certification: Certification {
                        cert_id: format!("CERT-{vendor}"),
                        valid_from: NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
                        valid_to,
                    },
                    safety_rating: 4,
                    workforce_size: 12,
                },
            )
            .unwrap();
        if approve {
            self.engine
                .set_approval(self.token(Role::Supervisor), &c.contractor_id, ApprovalStatus::Approved, c.version)
                .unwrap()
        } else {
            c
        }
    }
}

impl Default for World {
    fn default() -> Self {
        Self::new()
    }
}

// ---- oracles ----

/// Winding number of `ring` around `p`; nonzero means inside.
pub fn winding_number(ring: &[Point], p: Point) -> i32 {
    let n = ring.len();
    let mut wn = 0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn distance_to_ring(ring: &[Point], p: Point) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            ((a.x + t * dx - p.x).powi(2) + (a.y + t * dy - p.y).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Parametric closed-segment intersection, solved exactly in f64 with a
/// separate collinear branch.
pub fn segment_pair_intersects(a: Point, b: Point, c: Point, d: Point) -> bool {
    let r = (b.x - a.x, b.y - a.y);
    let s = (d.x - c.x, d.y - c.y);
    let qp = (c.x - a.x, c.y - a.y);
    let denom = r.0 * s.1 - r.1 * s.0;
    let qp_r = qp.0 * r.1 - qp.1 * r.0;
    if denom == 0.0 {
        if qp_r != 0.0 {
            return false;
        }
        // collinear: project onto r (or s if r is a point)
        let rr = r.0 * r.0 + r.1 * r.1;
        if rr == 0.0 {
            return a == c || a == d;
        }
        let t0 = (qp.0 * r.0 + qp.1 * r.1) / rr;
        let t1 = t0 + (s.0 * r.0 + s.1 * r.1) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        return lo <= 1.0 && hi >= 0.0;
    }
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = qp_r / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)
}

/// Edge-pair brute force plus mutual vertex containment.
pub fn overlap_oracle(a: &[Point], b: &[Point]) -> bool {
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segment_pair_intersects(a[i], a[(i + 1) % a.len()], b[j], b[(j + 1) % b.len()]) {
                return true;
            }
        }
    }
    winding_number(a, b[0]) != 0 || winding_number(b, a[0]) != 0
}

/// Triple loop over time, zone and matrix, written from the rule list.
pub fn conflicts_oracle(layout: &ZoneLayout, c: &PermitRequestView, others: &[zones::PermitView]) -> Vec<(PermitId, String)> {
    use PermitType::*;
    let mut out = Vec::new();
    for o in others {
        if !matches!(o.state, PermitState::Approved | PermitState::Active) {
            continue;
        }
        if !(c.valid_from <= o.valid_to && o.valid_from <= c.valid_to) {
            continue;
        }
        let za = layout.get(&c.zone_id).unwrap();
        let zb = layout.get(&o.zone_id).unwrap();
        let overlap = overlap_oracle(za.polygon(), zb.polygon());
        let same = c.zone_id == o.zone_id;
        let pair = |x: PermitType, y: PermitType| (c.permit_type == x && o.permit_type == y) || (c.permit_type == y && o.permit_type == x);
        let rule = if pair(HotWork, HotWork) && overlap {
            Some("HOT_HOT")
        } else if pair(HotWork, ConfinedSpace) && overlap {
            Some("HOT_CONFINED")
        } else if pair(Electrical, ConfinedSpace) && overlap {
            Some("ELECTRICAL_CONFINED")
        } else if pair(WorkingAtHeight, WorkingAtHeight) && same {
            Some("HEIGHT_HEIGHT")
        } else if overlap
            && ((c.permit_type == HotWork && zb.kind() == ZoneKind::StorageArea)
                || (o.permit_type == HotWork && za.kind() == ZoneKind::StorageArea))
        {
            Some("HOT_STORAGE")
        } else {
            None
        };
        if let Some(rule) = rule {
            out.push((o.permit_id.clone(), rule.to_owned()));
        }
    }
    out.sort();
    out
}

/// Violations of the cross-module safety invariants in `store`.
pub fn invariant_violations(store: &Store) -> Vec<String> {
    let mut out = Vec::new();
    let live: Vec<_> = store.live_views();
    for (i, a) in live.iter().enumerate() {
        let candidate = PermitRequestView {
            permit_type: a.permit_type,
            zone_id: a.zone_id.clone(),
            valid_from: a.valid_from,
            valid_to: a.valid_to,
        };
        for c in store.zones().permit_conflicts(&candidate, &live[i + 1..]) {
            out.push(format!("{} conflicts with {} ({})", a.permit_id, c.permit_id, c.rule));
        }
    }
    for p in store.permits().filter(|p| p.state == PermitState::Active) {
        if let Some(mid) = &p.machine_id {
            if store.machine(mid).unwrap().status == MachineStatus::OutOfService {
                out.push(format!("{} is ACTIVE on out-of-service {}", p.permit_id, mid));
            }
        }
    }
    out
}

// ---- random operations ----

#[derive(Debug, Clone)]
pub enum Op {
    Draft {
        role: Role,
        permit_type: PermitType,
        zone: ZoneId,
        machine: Option<MachineId>,
        contractor: Option<ContractorId>,
        offset_min: i64,
        len_min: i64,
    },
    Transition {
        role: Role,
        permit: PermitId,
        event: PermitEvent,
        stale: bool,
    },
    Report {
        role: Role,
        severity: Severity,
        category: IncidentCategory,
        zone: ZoneId,
        permit: Option<PermitId>,
    },
    Advance {
        role: Role,
        incident: IncidentId,
        target: IncidentState,
        note: bool,
    },
    MachineStatus {
        role: Role,
        machine: MachineId,
        status: MachineStatus,
    },
    Fault {
        role: Role,
        machine: MachineId,
    },
    Maintenance {
        role: Role,
        machine: MachineId,
    },
    Work {
        role: Role,
        machine: MachineId,
        permit: PermitId,
    },
    Approval {
        role: Role,
        contractor: ContractorId,
        status: ApprovalStatus,
    },
    Tick {
        minutes: i64,
    },
}

/// The event most likely to move a permit forward, and who may fire it.
fn natural_event(state: PermitState, rng: &mut ChaCha8Rng) -> Option<(PermitEvent, Role)> {
    use PermitEvent as E;
    use PermitState as S;
    let pick = |rng: &mut ChaCha8Rng, opts: &[(E, Role)]| *opts.choose(rng).unwrap();
    Some(match state {
        S::Draft => pick(rng, &[(E::Submit, Role::Technician), (E::Cancel, Role::Supervisor)]),
        S::Submitted => pick(
            rng,
            &[
                (E::Approve, Role::SafetyOfficer),
                (E::Approve, Role::SafetyOfficer),
                (E::Approve, Role::Supervisor),
                (E::Reject, Role::SafetyOfficer),
            ],
        ),
        S::Approved => (E::Activate, Role::Supervisor),
        S::Active => pick(
            rng,
            &[(E::Close, Role::Supervisor), (E::Suspend, Role::SafetyOfficer), (E::Close, Role::Supervisor)],
        ),
        S::Suspended => (E::Resume, Role::SafetyOfficer),
        _ => return None,
    })
}

pub fn random_op(store: &Store, rng: &mut ChaCha8Rng) -> Op {
    let zones = zone_ids();
    let machines: Vec<MachineId> = store.machines().map(|m| m.machine_id.clone()).collect();
    let contractors: Vec<ContractorId> = store.contractors().map(|c| c.contractor_id.clone()).collect();
    let permits: Vec<&Permit> = store.permits().collect();
    let open: Vec<&Permit> = permits.iter().copied().filter(|p| !p.state.is_terminal()).collect();
    let incidents: Vec<&Incident> = store.incidents().collect();
    let role = *Role::ALL.choose(rng).unwrap();
    let roll = rng.gen_range(0..100);
    match roll {
        0..=17 => {
            let requester = *[Role::Technician, Role::Engineer, Role::Contractor, Role::Supervisor]
                .choose(rng)
                .unwrap();
            let contractor = if requester == Role::Contractor || rng.gen_bool(0.2) {
                contractors.choose(rng).cloned()
            } else {
                None
            };
            Op::Draft {
                role: requester,
                permit_type: *PermitType::ALL.choose(rng).unwrap(),
                zone: zones.choose(rng).unwrap().clone(),
                machine: if rng.gen_bool(0.4) { machines.choose(rng).cloned() } else { None },
                contractor,
                offset_min: rng.gen_range(-90..240),
                len_min: rng.gen_range(20..600),
            }
        }
        18..=64 if !open.is_empty() => {
            let p = open.choose(rng).unwrap();
            let (event, role) = match natural_event(p.state, rng) {
                Some(choice) if rng.gen_bool(0.85) => choice,
                _ => (*PermitEvent::ALL.choose(rng).unwrap(), role),
            };
            Op::Transition {
                role,
                permit: p.permit_id.clone(),
                event,
                stale: rng.gen_bool(0.03),
            }
        }
        65..=70 => Op::Report {
            role,
            severity: *[Severity::Minor, Severity::Minor, Severity::Major, Severity::Fatal].choose(rng).unwrap(),
            category: *IncidentCategory::ALL.choose(rng).unwrap(),
            zone: zones.choose(rng).unwrap().clone(),
            permit: if rng.gen_bool(0.5) { permits.choose(rng).map(|p| p.permit_id.clone()) } else { None },
        },
        71..=77 if !incidents.is_empty() => {
            let i = incidents.choose(rng).unwrap();
            let target = i.state.successor().unwrap_or(IncidentState::Closed);
            Op::Advance {
                role: if rng.gen_bool(0.8) { Role::SafetyOfficer } else { role },
                incident: i.incident_id.clone(),
                target,
                note: rng.gen_bool(0.7),
            }
        }
        78..=82 if !machines.is_empty() => Op::MachineStatus {
            role: if rng.gen_bool(0.8) { Role::Engineer } else { role },
            machine: machines.choose(rng).unwrap().clone(),
            status: *MachineStatus::ALL.choose(rng).unwrap(),
        },
        83..=84 if !machines.is_empty() => Op::Fault {
            role,
            machine: machines.choose(rng).unwrap().clone(),
        },
        85..=86 if !machines.is_empty() => Op::Maintenance {
            role: Role::Engineer,
            machine: machines.choose(rng).unwrap().clone(),
        },
        87..=92 if !machines.is_empty() && !permits.is_empty() => {
            let with_machine: Vec<&&Permit> = permits.iter().filter(|p| p.machine_id.is_some()).collect();
            let active: Vec<&&Permit> = with_machine.iter().copied().filter(|p| p.state == PermitState::Active).collect();
            let pool = if !active.is_empty() && rng.gen_bool(0.6) { &active } else { &with_machine };
            let (machine, permit) = match pool.choose(rng) {
                Some(p) if rng.gen_bool(0.8) => (p.machine_id.clone().unwrap(), p.permit_id.clone()),
                _ => (
                    machines.choose(rng).unwrap().clone(),
                    permits.choose(rng).unwrap().permit_id.clone(),
                ),
            };
            Op::Work {
                role: Role::Technician,
                machine,
                permit,
            }
        }
        93..=94 if !contractors.is_empty() => Op::Approval {
            role: Role::Supervisor,
            contractor: contractors.choose(rng).unwrap().clone(),
            status: *[ApprovalStatus::Approved, ApprovalStatus::Suspended, ApprovalStatus::Approved]
                .choose(rng)
                .unwrap(),
        },
        _ => Op::Tick {
            minutes: rng.gen_range(0..45),
        },
    }
}

/// Applies `op`; domain errors are expected and returned.
pub fn apply(world: &World, op: &Op) -> Result<()> {
    let e = &world.engine;
    let store = e.snapshot();
    match op {
        Op::Draft {
            role,
            permit_type,
            zone,
            machine,
            contractor,
            offset_min,
            len_min,
        } => {
            let from = world.clock.now() + Duration::minutes(*offset_min);
            e.create_draft(
                world.token(*role),
                PermitRequest {
                    permit_type: *permit_type,
                    zone_id: zone.clone(),
                    machine_id: machine.clone(),
                    contractor_id: contractor.clone(),
                    valid_from: from,
                    valid_to: from + Duration::minutes(*len_min),
                    description: String::new(),
                },
            )
            .map(drop)
        }
        Op::Transition {
            role,
            permit,
            event,
            stale,
        } => {
            let p = store.permit(permit).unwrap();
            // drafts belong to whoever created them; let that role submit
            let token = if *event == PermitEvent::Submit {
                world
                    .users
                    .iter()
                    .find(|(_, u)| u.user_id == p.requester_id)
                    .map(|(r, _)| world.token(*r))
                    .unwrap_or(world.token(*role))
            } else {
                world.token(*role)
            };
            let version = if *stale { p.version + 1 } else { p.version };
            e.transition(token, permit, *event, version, None).map(drop)
        }
        Op::Report {
            role,
            severity,
            category,
            zone,
            permit,
        } => e
            .report_incident(
                world.token(*role),
                NewIncident {
                    title: "incident".into(),
                    description: String::new(),
                    severity: *severity,
                    category: *category,
                    zone_id: zone.clone(),
                    permit_id: permit.clone(),
                },
            )
            .map(drop),
        Op::Advance {
            role,
            incident,
            target,
            note,
        } => {
            let version = store.incident(incident).unwrap().version;
            e.advance_incident(world.token(*role), incident, *target, note.then_some("fixed guard rail"), version)
                .map(drop)
        }
        Op::MachineStatus { role, machine, status } => {
            let version = store.machine(machine).unwrap().version;
            e.set_machine_status(world.token(*role), machine, *status, version).map(drop)
        }
        Op::Fault { role, machine } => e.report_fault(world.token(*role), machine, "noise").map(drop),
        Op::Maintenance { role, machine } => e.record_maintenance(world.token(*role), machine, "serviced").map(drop),
        Op::Work { role, machine, permit } => e.start_machine_work(world.token(*role), machine, permit).map(drop),
        Op::Approval {
            role,
            contractor,
            status,
        } => {
            let version = store.contractor(contractor).unwrap().version;
            e.set_approval(world.token(*role), contractor, *status, version).map(drop)
        }
        Op::Tick { minutes } => {
            world.clock.advance(Duration::minutes(*minutes));
            Ok(())
        }
    }
}

/// Machines and contractors for random traces.
pub fn stock(world: &World) {
    let crit = [Criticality::High, Criticality::Medium, Criticality::Low];
    for (i, z) in ["Z1", "Z1", "Z2", "Z3", "Z5", "Z4"].iter().enumerate() {
        world.machine(&format!("M-{i:02}"), z, crit[i % 3]);
    }
    let all: Vec<PermitType> = PermitType::ALL.to_vec();
    world.contractor("V-ALL", &all, NaiveDate::from_ymd_opt(2026, 12, 31).unwrap(), true);
    world.contractor("V-HOT", &[PermitType::HotWork], NaiveDate::from_ymd_opt(2026, 3, 3).unwrap(), true);
    world.contractor("V-NEW", &all, NaiveDate::from_ymd_opt(2026, 12, 31).unwrap(), false);
}

/// Success counts per operation kind.
pub fn kind(op: &Op) -> &'static str {
    match op {
        Op::Draft { .. } => "draft",
        Op::Transition { .. } => "transition",
        Op::Report { .. } => "report",
        Op::Advance { .. } => "advance",
        Op::MachineStatus { .. } => "machine_status",
        Op::Fault { .. } => "fault",
        Op::Maintenance { .. } => "maintenance",
        Op::Work { .. } => "work",
        Op::Approval { .. } => "approval",
        Op::Tick { .. } => "tick",
    }
}

pub fn set_of<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}
