//! Data-directory layout, journal replay and snapshots.
//!
//! A data directory holds `journal.ndjson` (the audit log, which is also the
//! journal of record) and optionally `state.snapshot.json`. Loading takes
//! the snapshot if present, checks that it lines up with the journal, and
//! replays the entries after it. The whole chain is verified either way.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audit::{AuditEntry, Hash256};
use crate::engine::{Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::journal::{read_journal, CrashPlan, FileJournal, Payload};
use crate::store::{Entities, Store};
use crate::time::Clock;

pub const JOURNAL_FILE: &str = "journal.ndjson";
pub const SNAPSHOT_FILE: &str = "state.snapshot.json";
const SNAPSHOT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: u32,
    pub last_seq: u64,
    pub last_hash: Hash256,
    /// Entity count per kind.
    pub version_vector: BTreeMap<String, u64>,
    pub entities: Entities,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OpenOptions {
    /// `fdatasync` after every commit.
    pub fsync: bool,
    /// Fault injection for crash tests.
    pub crash: Option<CrashPlan>,
}

/// State rebuilt from disk.
#[derive(Debug)]
pub struct Loaded {
    pub store: Store,
    pub entries: Vec<AuditEntry>,
    /// Byte length of the committed journal prefix.
    pub valid_len: u64,
    /// Bytes of an uncommitted tail that will be cut on open.
    pub torn_bytes: u64,
    pub from_snapshot: Option<u64>,
}

pub fn journal_path(dir: &Path) -> PathBuf {
    dir.join(JOURNAL_FILE)
}

pub fn snapshot_path(dir: &Path) -> PathBuf {
    dir.join(SNAPSHOT_FILE)
}

fn read_or_empty(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Applies the effects of `entries` to `store`, in order.
pub fn replay<'a>(store: &mut Store, entries: impl IntoIterator<Item = &'a AuditEntry>) -> Result<()> {
    for entry in entries {
        let payload: Payload = serde_json::from_value(entry.payload.clone())
            .map_err(|_| Error::CorruptJournal { first_bad_seq: entry.seq })?;
        for effect in payload.effects {
            store.apply(effect);
        }
    }
    Ok(())
}

/// Rebuilds state from journal bytes and an optional snapshot.
pub fn load_bytes(journal: &[u8], snapshot: Option<Snapshot>) -> Result<Loaded> {
    let read = read_journal(journal)?;
    let (mut store, skip) = match &snapshot {
        None => (Store::default(), 0),
        Some(snap) => {
            if snap.format != SNAPSHOT_FORMAT {
                return Err(Error::SnapshotJournalGap(format!("unsupported snapshot format {}", snap.format)));
            }
            if snap.last_seq > 0 {
                let at = read.entries.get(snap.last_seq as usize - 1).ok_or_else(|| {
                    Error::SnapshotJournalGap(format!(
                        "snapshot ends at seq {} but the journal has {} entries",
                        snap.last_seq,
                        read.entries.len()
                    ))
                })?;
                if at.entry_hash != snap.last_hash {
                    return Err(Error::SnapshotJournalGap(format!(
                        "entry {} hash differs from the snapshot",
                        snap.last_seq
                    )));
                }
            }
            (Store::from_entities(snap.entities.clone()), snap.last_seq as usize)
        }
    };
    replay(&mut store, &read.entries[skip..])?;
    Ok(Loaded {
        store,
        entries: read.entries,
        valid_len: read.valid_len,
        torn_bytes: read.torn_bytes,
        from_snapshot: snapshot.map(|s| s.last_seq),
    })
}

/// Loads a data directory without opening it for writing.
pub fn load(dir: &Path) -> Result<Loaded> {
    let journal = read_or_empty(&journal_path(dir))?;
    let snap_bytes = read_or_empty(&snapshot_path(dir))?;
    let snapshot = if snap_bytes.is_empty() {
        None
    } else {
        Some(serde_json::from_slice(&snap_bytes)?)
    };
    load_bytes(&journal, snapshot)
}

/// Opens a data directory for reading and writing, creating it if needed.
pub fn open(dir: &Path, clock: Arc<dyn Clock>, config: EngineConfig, options: OpenOptions) -> Result<Engine> {
    fs::create_dir_all(dir)?;
    let loaded = load(dir)?;
    if loaded.torn_bytes > 0 {
        tracing::warn!(bytes = loaded.torn_bytes, "dropping uncommitted journal tail");
    }
    let path = journal_path(dir);
    let mut sink = FileJournal::open(&path, loaded.valid_len, options.fsync)?;
    if let Some(plan) = options.crash {
        sink = sink.with_crash(plan);
    }
    Ok(Engine::restore(
        clock,
        config,
        loaded.store,
        loaded.entries,
        Box::new(sink),
        Some(path),
    ))
}

/// Writes `state.snapshot.json` for the engine's current state via a
/// temporary file and rename.
pub fn write_snapshot(engine: &Engine, dir: &Path) -> Result<Snapshot> {
    let (store, last) = engine.checkpoint();
    let (last_seq, last_hash) = last.unwrap_or((0, Hash256::ZERO));
    let snapshot = Snapshot {
        format: SNAPSHOT_FORMAT,
        last_seq,
        last_hash,
        version_vector: store.counts(),
        entities: store.to_entities(),
    };
    let target = snapshot_path(dir);
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    {
        let mut file = fs::File::create(&tmp)?;
        serde_json::to_writer(&mut file, &snapshot)?;
        file.write_all(b"\n")?;
        file.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(snapshot)
}
