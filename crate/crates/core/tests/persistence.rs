mod common;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use railshop_core::journal::{CrashPlan, CrashPoint};
use railshop_core::persistence::{self, journal_path, load_bytes, OpenOptions};
use railshop_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn file_world(dir: &Path) -> World {
    let clock = ManualClock::new(t0());
    let engine = persistence::open(dir, Arc::new(clock.clone()), config(3), OpenOptions::default()).unwrap();
    World::populate(clock, engine)
}

fn run_ops(w: &World, seed: u64, n: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let op = random_op(&w.engine.snapshot(), &mut rng);
        let _ = apply(w, &op);
    }
}

fn log_of(engine: &Engine) -> Vec<AuditEntry> {
    engine.audit_entries().iter().map(|e| (**e).clone()).collect()
}

#[test]
fn empty_directory_loads_empty() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = persistence::load(dir.path()).unwrap();
    assert_eq!(loaded.store, Store::default());
    assert!(loaded.entries.is_empty());
    assert_eq!(loaded.torn_bytes, 0);
}

#[test]
fn replay_reproduces_live_state() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    stock(&w);
    run_ops(&w, 50, 50);
    let loaded = persistence::load(dir.path()).unwrap();
    assert_eq!(loaded.store, w.engine.snapshot());
    assert_eq!(loaded.entries, log_of(&w.engine));
    let clock = ManualClock::new(w.clock.now());
    drop(w);
    let reopened = persistence::open(dir.path(), Arc::new(clock), config(3), OpenOptions::default()).unwrap();
    assert_eq!(reopened.snapshot(), loaded.store);
    assert!(reopened.verify_chain().unwrap().valid);
}

#[test]
fn damaged_middle_line_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    stock(&w);
    run_ops(&w, 1, 30);
    drop(w);
    let bytes = fs::read(journal_path(dir.path())).unwrap();
    let lines: Vec<&[u8]> = bytes.split_inclusive(|&b| b == b'\n').collect();
    assert!(lines.len() > 6);
    let mut damaged = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i == 4 {
            damaged.extend_from_slice(&line[..line.len() / 2]);
            damaged.push(b'\n');
        } else {
            damaged.extend_from_slice(line);
        }
    }
    fs::write(journal_path(dir.path()), &damaged).unwrap();
    match persistence::load(dir.path()).unwrap_err() {
        Error::CorruptJournal { first_bad_seq } => assert_eq!(first_bad_seq, 5),
        e => panic!("{e}"),
    }
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(t0()));
    let e = persistence::open(dir.path(), clock, config(3), OpenOptions::default()).map(|_| ()).unwrap_err();
    assert_eq!(e.code(), "CORRUPT_JOURNAL");
}

#[test]
fn snapshot_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    stock(&w);
    run_ops(&w, 2, 40);
    let snap = persistence::write_snapshot(&w.engine, dir.path()).unwrap();
    assert_eq!(snap.last_seq, w.engine.last_seq());
    run_ops(&w, 3, 40);
    let loaded = persistence::load(dir.path()).unwrap();
    assert_eq!(loaded.from_snapshot, Some(snap.last_seq));
    assert_eq!(loaded.store, w.engine.snapshot());
    // a snapshot ahead of its journal is refused
    let journal = fs::read(journal_path(dir.path())).unwrap();
    let first_line = journal.iter().position(|&b| b == b'\n').unwrap() + 1;
    let mut ahead = snap.clone();
    ahead.last_seq = loaded.entries.len() as u64 + 1;
    assert_eq!(load_bytes(&journal, Some(ahead)).unwrap_err().code(), "SNAPSHOT_JOURNAL_GAP");
    let mut wrong_hash = snap;
    wrong_hash.last_hash = Hash256::ZERO;
    assert_eq!(load_bytes(&journal, Some(wrong_hash.clone())).unwrap_err().code(), "SNAPSHOT_JOURNAL_GAP");
    wrong_hash.last_seq = 0;
    assert!(load_bytes(&journal[..first_line], Some(wrong_hash)).is_ok());
}

#[test]
fn stale_version_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    let p = w.draft(PermitType::General, "Z2");
    let p = w.fire(Role::Technician, &p, PermitEvent::Submit).unwrap();
    let before_state = w.engine.snapshot();
    let before_bytes = fs::read(journal_path(dir.path())).unwrap();
    let e = w
        .engine
        .transition(w.token(Role::SafetyOfficer), &p.permit_id, PermitEvent::Approve, p.version - 1, None)
        .unwrap_err();
    assert_eq!(e.code(), "VERSION_CONFLICT");
    assert_eq!(w.engine.snapshot(), before_state);
    assert_eq!(fs::read(journal_path(dir.path())).unwrap(), before_bytes);
}

#[test]
fn incomplete_batch_is_dropped_whole() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    let a = w.permit_in(PermitState::Active, "Z1");
    let b = w.permit_in(PermitState::Active, "Z3");
    let before = w.engine.snapshot();
    let before_len = fs::read(journal_path(dir.path())).unwrap().len();
    let incident = NewIncident {
        title: "fire".into(),
        description: "welding spatter".into(),
        severity: Severity::Major,
        category: IncidentCategory::Burn,
        zone_id: "Z1".into(),
        permit_id: None,
    };
    let r = w.engine.report_incident(w.token(Role::Technician), incident).unwrap();
    assert_eq!(r.suspended, vec![a.permit_id, b.permit_id]);
    let full = fs::read(journal_path(dir.path())).unwrap();
    // cut after the first complete line of the three-entry batch
    let first_end = before_len + full[before_len..].iter().position(|&c| c == b'\n').unwrap() + 1;
    for cut in [before_len + 1, first_end, full.len() - 1] {
        let loaded = load_bytes(&full[..cut], None).unwrap();
        assert_eq!(loaded.store, before, "cut at {cut}");
        assert_eq!(loaded.valid_len as usize, before_len);
        assert_eq!(loaded.torn_bytes as usize, cut - before_len);
    }
    assert_eq!(load_bytes(&full, None).unwrap().store, w.engine.snapshot());
}

#[test]
fn crash_mid_batch_recovers_prior_state() {
    let dir = tempfile::tempdir().unwrap();
    let w = file_world(dir.path());
    w.permit_in(PermitState::Active, "Z1");
    w.permit_in(PermitState::Active, "Z3");
    let before = w.engine.snapshot();
    let now = w.clock.now();
    drop(w);
    let clock = ManualClock::new(now);
    let crash = CrashPlan {
        commit: 1,
        point: CrashPoint::TornWrite(700),
    };
    let engine = persistence::open(
        dir.path(),
        Arc::new(clock.clone()),
        config(3),
        OpenOptions {
            fsync: false,
            crash: Some(crash),
        },
    )
    .unwrap();
    let tech = engine.login("tech", CREDENTIAL).unwrap().token;
    let incident = NewIncident {
        title: "fire".into(),
        description: "welding spatter".into(),
        severity: Severity::Major,
        category: IncidentCategory::Burn,
        zone_id: "Z1".into(),
        permit_id: None,
    };
    assert!(engine.report_incident(&tech, incident).is_err());
    assert!(engine.is_poisoned());
    let req = PermitRequest {
        permit_type: PermitType::General,
        zone_id: "Z2".into(),
        machine_id: None,
        contractor_id: None,
        description: "after the crash".into(),
        valid_from: now,
        valid_to: now + chrono::Duration::hours(1),
    };
    assert_eq!(engine.create_draft(&tech, req).unwrap_err().code(), "ENGINE_POISONED");
    drop(engine);
    let reopened = persistence::open(dir.path(), Arc::new(clock), config(3), OpenOptions::default()).unwrap();
    assert_eq!(reopened.snapshot(), before);
    assert!(reopened.verify_chain().unwrap().valid);
}
