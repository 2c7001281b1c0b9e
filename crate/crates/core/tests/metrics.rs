mod common;

use std::collections::BTreeMap;

use chrono::Duration;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use railshop_core::metrics::{compare_pipelines, incident_stats, reduction_pct, stage_durations};
use railshop_core::*;

use common::*;

fn timings(pairs: &[(Stage, f64)]) -> Vec<StageTiming> {
    pairs.iter().map(|&(stage, duration)| StageTiming { stage, duration }).collect()
}

fn far_future() -> Timestamp {
    t0() + Duration::days(365)
}

fn entries(w: &World) -> Vec<AuditEntry> {
    w.engine.audit_entries().iter().map(|e| (**e).clone()).collect()
}

#[test]
fn empty_log_gives_zero_everywhere() {
    let d = stage_durations(std::iter::empty(), t0(), far_future()).unwrap();
    assert_eq!(d.len(), 5);
    assert!(d.values().all(|v| *v == 0.0));
    assert_eq!(
        stage_durations(std::iter::empty(), far_future(), t0()).unwrap_err().code(),
        "INVALID_RANGE"
    );
}

#[test]
fn approval_minutes_add_up() {
    let w = World::new();
    let start = w.clock.now();
    for minutes in [30, 50] {
        let p = w.draft(PermitType::General, "Z2");
        let p = w.fire(Role::Technician, &p, PermitEvent::Submit).unwrap();
        w.clock.advance(Duration::minutes(minutes));
        w.fire(Role::SafetyOfficer, &p, PermitEvent::Approve).unwrap();
    }
    let log = entries(&w);
    let d = stage_durations(&log, start, far_future()).unwrap();
    assert_eq!(d[&Stage::PermitApproval], 80.0);
    // lifecycles that start before the window are left out
    let d = stage_durations(&log, start + Duration::minutes(1), far_future()).unwrap();
    assert_eq!(d[&Stage::PermitApproval], 50.0);
}

#[test]
fn machine_allocation_needs_a_machine() {
    let w = World::new();
    let m = w.machine("M-1", "Z1", Criticality::Low);
    let now = w.clock.now();
    let mut with = w.request(PermitType::General, "Z1", now, now + Duration::hours(8));
    with.machine_id = Some(m.machine_id);
    let without = w.request(PermitType::General, "Z2", now, now + Duration::hours(8));
    for req in [with, without] {
        let p = w.engine.create_draft(&w.requester, req).unwrap();
        let p = w.fire(Role::Technician, &p, PermitEvent::Submit).unwrap();
        let p = w.fire(Role::SafetyOfficer, &p, PermitEvent::Approve).unwrap();
        w.clock.advance(Duration::minutes(12));
        w.fire(Role::Supervisor, &p, PermitEvent::Activate).unwrap();
    }
    let d = stage_durations(&entries(&w), t0(), far_future()).unwrap();
    assert_eq!(d[&Stage::MachineAllocation], 12.0);
    assert_eq!(d[&Stage::TaskExecutionMonitoring], 0.0);
}

#[test]
fn comparison_errors() {
    let e = compare_pipelines(
        &timings(&[(Stage::PermitApproval, 10.0)]),
        &timings(&[(Stage::IncidentLogging, 5.0)]),
    )
    .unwrap_err();
    assert_eq!(e.code(), "STAGE_MISMATCH");
    let e = compare_pipelines(
        &timings(&[(Stage::PermitApproval, 0.0)]),
        &timings(&[(Stage::PermitApproval, 0.0)]),
    )
    .unwrap_err();
    assert_eq!(e.code(), "ZERO_BASELINE");
    let e = compare_pipelines(
        &timings(&[(Stage::PermitApproval, -1.0)]),
        &timings(&[(Stage::PermitApproval, 0.0)]),
    )
    .unwrap_err();
    assert_eq!(e.class(), ErrorClass::Validation);
    assert_eq!(reduction_pct(0.0, 5.0), 0.0);
    // a slower digital stage is a negative reduction
    assert_eq!(reduction_pct(40.0, 50.0), -25.0);
}

#[test]
fn csv_has_one_row_per_stage() {
    let all: Vec<(Stage, f64)> = Stage::ALL.iter().map(|s| (*s, 60.0)).collect();
    let half: Vec<(Stage, f64)> = Stage::ALL.iter().map(|s| (*s, 30.0)).collect();
    let csv = compare_pipelines(&timings(&all), &timings(&half)).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "stage,manual_min,digital_min,reduction_pct");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1], "PERMIT_APPROVAL,60,30,50");
}

#[test]
fn incident_stats_examples() {
    assert!(incident_stats(&[]).is_empty());
    let w = World::new();
    for category in [IncidentCategory::Burn, IncidentCategory::Burn, IncidentCategory::Fall, IncidentCategory::Burn] {
        w.engine
            .report_incident(
                w.token(Role::Technician),
                NewIncident {
                    title: "t".into(),
                    description: String::new(),
                    severity: Severity::Minor,
                    category,
                    zone_id: "Z2".into(),
                    permit_id: None,
                },
            )
            .unwrap();
    }
    let stats = w.engine.incident_report();
    assert_eq!(stats.len(), 2);
    assert_eq!(stats[&IncidentCategory::Burn], 75.0);
    assert_eq!(stats[&IncidentCategory::Fall], 25.0);
}

/// First start per entity, then the first qualifying end after it.
fn brute_durations(log: &[AuditEntry], from: Timestamp, to: Timestamp) -> BTreeMap<Stage, f64> {
    let mut out = BTreeMap::new();
    for stage in Stage::ALL {
        let (start, end) = stage.boundaries();
        let mut ids: Vec<&str> = log.iter().map(|e| e.entity.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        let mut ms = 0i64;
        for id in ids {
            let mine: Vec<&AuditEntry> = log.iter().filter(|e| e.entity.id == id).collect();
            let Some(s) = mine.iter().position(|e| e.action == start) else { continue };
            let qualifies = |e: &&&AuditEntry| {
                e.action == end
                    && (stage != Stage::MachineAllocation
                        || e.payload["effects"]
                            .as_array()
                            .unwrap()
                            .iter()
                            .any(|x| x["kind"] == "permit" && x["state"]["machine_id"].is_string()))
            };
            let Some(e) = mine.iter().skip(s + 1).find(qualifies) else { continue };
            let (a, b) = (mine[s].at, e.at);
            if from <= a && a <= to && from <= b && b <= to {
                ms += (b - a).num_milliseconds();
            }
        }
        out.insert(stage, ms as f64 / 60_000.0);
    }
    out
}

fn stage_list() -> impl Strategy<Value = Vec<(Stage, f64, f64)>> {
    prop::collection::btree_map(
        prop::sample::select(Stage::ALL.to_vec()),
        (0.5f64..1e4, 0.0f64..1e4),
        1..=5,
    )
    .prop_map(|m| m.into_iter().map(|(s, (a, b))| (s, a, b)).collect())
}

proptest! {
    #[test]
    fn cumulative_is_the_manual_weighted_mean(stages in stage_list()) {
        let manual: Vec<(Stage, f64)> = stages.iter().map(|(s, m, _)| (*s, *m)).collect();
        let digital: Vec<(Stage, f64)> = stages.iter().map(|(s, _, d)| (*s, *d)).collect();
        let r = compare_pipelines(&timings(&manual), &timings(&digital)).unwrap();
        let total: f64 = manual.iter().map(|(_, m)| m).sum();
        let weighted: f64 = r.per_stage.values().map(|c| c.manual / total * c.reduction_pct).sum();
        prop_assert!((r.cumulative.reduction_pct - weighted).abs() <= 1e-9 * weighted.abs().max(1.0));
        for (s, m, d) in &stages {
            prop_assert!((r.per_stage[s].reduction_pct - 100.0 * (m - d) / m).abs() < 1e-9);
        }
    }

    #[test]
    fn category_shares_sum_to_100(counts in prop::collection::vec(0u64..1000, IncidentCategory::ALL.len())) {
        let map: BTreeMap<IncidentCategory, u64> =
            IncidentCategory::ALL.iter().copied().zip(counts.iter().copied()).collect();
        let pct = railshop_core::metrics::category_percentages(&map);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            prop_assert!(pct.is_empty());
        } else {
            prop_assert!((pct.values().sum::<f64>() - 100.0).abs() < 1e-9);
            prop_assert_eq!(pct.len(), counts.iter().filter(|c| **c > 0).count());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn stage_durations_match_brute_force(seed in any::<u64>(), from_h in 0i64..48, len_h in 0i64..200) {
        let w = World::new();
        stock(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..250 {
            let op = random_op(&w.engine.snapshot(), &mut rng);
            let _ = apply(&w, &op);
        }
        let log = entries(&w);
        let from = t0() + Duration::hours(from_h);
        let to = from + Duration::hours(len_h);
        let got = stage_durations(&log, from, to).unwrap();
        let expected = brute_durations(&log, from, to);
        for stage in Stage::ALL {
            prop_assert!((got[&stage] - expected[&stage]).abs() < 1e-9, "{stage:?}: {} vs {}", got[&stage], expected[&stage]);
        }
    }
}
