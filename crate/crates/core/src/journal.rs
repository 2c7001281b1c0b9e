//! Journal sinks and the recovery-aware journal reader.
//!
//! A commit is one `write_all` of one or more newline-terminated lines (a
//! batch). A batch is durable once its last newline is on disk.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audit::{entry_is_sound, parse_line, AuditEntry, Hash256};
use crate::error::{Error, Result};
use crate::store::Effect;

/// Position of an entry inside its commit batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPos {
    pub index: u32,
    pub size: u32,
}

/// What every journal payload looks like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub op: String,
    pub batch: BatchPos,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub input: serde_json::Value,
    pub effects: Vec<Effect>,
}

pub trait JournalSink: Send {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()>;
}

/// Keeps nothing; the engine's in-memory log is the only copy.
#[derive(Debug, Default)]
pub struct MemoryJournal;

impl JournalSink for MemoryJournal {
    fn append(&mut self, _bytes: &[u8]) -> io::Result<()> {
        Ok(())
    }
}

/// Where an injected crash strikes inside a commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Nothing reaches the file.
    BeforeWrite,
    /// Only the first `n` bytes of the batch reach the file, and never the
    /// whole batch.
    TornWrite(usize),
    /// The batch is fully written, then the process dies.
    AfterWrite,
}

/// Test hook: crash on the `commit`-th append (1-based) of this sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrashPlan {
    pub commit: u64,
    pub point: CrashPoint,
}

#[derive(Debug)]
pub struct FileJournal {
    file: File,
    fsync: bool,
    appends: u64,
    crash: Option<CrashPlan>,
}

impl FileJournal {
    /// Opens `path` for appending, first cutting it to `valid_len` bytes so a
    /// torn tail from an earlier crash is discarded.
    pub fn open(path: &Path, valid_len: u64, fsync: bool) -> Result<Self> {
        let file = OpenOptions::new().create(true).read(true).write(true).open(path)?;
        if file.metadata()?.len() != valid_len {
            tracing::warn!(path = %path.display(), valid_len, "truncating torn journal tail");
            file.set_len(valid_len)?;
            file.sync_all()?;
        }
        let mut file = file;
        use std::io::Seek;
        file.seek(io::SeekFrom::End(0))?;
        Ok(Self {
            file,
            fsync,
            appends: 0,
            crash: None,
        })
    }

    pub fn with_crash(mut self, plan: CrashPlan) -> Self {
        self.crash = Some(plan);
        self
    }
}

fn injected() -> io::Error {
    io::Error::new(io::ErrorKind::Other, "injected crash")
}

impl JournalSink for FileJournal {
    fn append(&mut self, bytes: &[u8]) -> io::Result<()> {
        self.appends += 1;
        let crash = self
            .crash
            .filter(|plan| plan.commit == self.appends)
            .map(|plan| plan.point);
        match crash {
            Some(CrashPoint::BeforeWrite) => return Err(injected()),
            Some(CrashPoint::TornWrite(n)) => {
                self.file.write_all(&bytes[..n.min(bytes.len().saturating_sub(1))])?;
                self.file.flush()?;
                return Err(injected());
            }
            _ => {}
        }
        self.file.write_all(bytes)?;
        self.file.flush()?;
        if self.fsync {
            self.file.sync_data()?;
        }
        if crash == Some(CrashPoint::AfterWrite) {
            return Err(injected());
        }
        Ok(())
    }
}

/// Result of reading a journal.
#[derive(Debug, Default)]
pub struct ReadJournal {
    pub entries: Vec<AuditEntry>,
    /// Bytes covered by complete batches; anything after is a torn tail.
    pub valid_len: u64,
    pub torn_bytes: u64,
}

fn batch_of(entry: &AuditEntry) -> Option<BatchPos> {
    serde_json::from_value(entry.payload.get("batch")?.clone()).ok()
}

/// Parses and verifies a journal, dropping an uncommitted tail: a final line
/// without a newline, or a last batch that is missing entries. Anything else
/// that fails to parse or verify is [`Error::CorruptJournal`].
pub fn read_journal(bytes: &[u8]) -> Result<ReadJournal> {
    let mut out = ReadJournal::default();
    let mut prev = Hash256::ZERO;
    let mut pos = 0usize;
    let mut batch_start_len = 0u64;
    let mut batch_start_entries = 0usize;
    let mut expected_index = 0u32;
    while pos < bytes.len() {
        let Some(rel_end) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            break; // unterminated final line
        };
        let line = &bytes[pos..pos + rel_end];
        let seq = out.entries.len() as u64 + 1;
        let entry = parse_line(line)
            .filter(|e| entry_is_sound(e, seq, &prev))
            .ok_or(Error::CorruptJournal { first_bad_seq: seq })?;
        let batch = batch_of(&entry).ok_or(Error::CorruptJournal { first_bad_seq: seq })?;
        if batch.index != expected_index || batch.index >= batch.size {
            return Err(Error::CorruptJournal { first_bad_seq: seq });
        }
        if batch.index == 0 {
            batch_start_len = pos as u64;
            batch_start_entries = out.entries.len();
        }
        prev = entry.entry_hash;
        out.entries.push(entry);
        pos += rel_end + 1;
        expected_index = batch.index + 1;
        if expected_index == batch.size {
            expected_index = 0;
            out.valid_len = pos as u64;
        }
    }
    if expected_index != 0 {
        out.entries.truncate(batch_start_entries);
        out.valid_len = batch_start_len;
    }
    out.torn_bytes = bytes.len() as u64 - out.valid_len;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::audit::{Actor, EntityRef};
    use crate::time::parse;

    fn batch_bytes(sizes: &[u32]) -> (Vec<AuditEntry>, Vec<u8>) {
        let t0 = parse("2026-03-01T08:00:00Z").unwrap();
        let mut entries: Vec<AuditEntry> = Vec::new();
        for &size in sizes {
            for index in 0..size {
                let prev = entries.last().map(|e| (e.seq, e.entry_hash));
                entries.push(AuditEntry::chained(
                    prev,
                    t0,
                    Actor::System,
                    "permit.expire",
                    EntityRef::new("permit", "p"),
                    json!({ "op": "permit.expire", "batch": { "index": index, "size": size }, "effects": [] }),
                ));
            }
        }
        let bytes = entries.iter().flat_map(|e| (e.to_line() + "\n").into_bytes()).collect();
        (entries, bytes)
    }

    #[test]
    fn complete_journal_reads_fully() {
        let (entries, bytes) = batch_bytes(&[1, 3, 1]);
        let read = read_journal(&bytes).unwrap();
        assert_eq!(read.entries, entries);
        assert_eq!(read.valid_len, bytes.len() as u64);
        assert_eq!(read.torn_bytes, 0);
    }

    #[test]
    fn torn_tail_is_dropped() {
        let (entries, bytes) = batch_bytes(&[1, 3]);
        let first_len = entries[0].to_line().len() + 1;
        // cut inside the second batch, at a line boundary and mid-line
        let second_line_end = first_len + entries[1].to_line().len() + 1;
        for cut in [second_line_end, second_line_end + 5, bytes.len() - 1] {
            let read = read_journal(&bytes[..cut]).unwrap();
            assert_eq!(read.entries.len(), 1, "cut at {cut}");
            assert_eq!(read.valid_len, first_len as u64);
        }
    }

    #[test]
    fn truncated_middle_line_is_corrupt() {
        let (entries, bytes) = batch_bytes(&[1, 1, 1]);
        let l1 = entries[0].to_line().len() + 1;
        let mut broken = bytes[..l1].to_vec();
        broken.extend_from_slice(&bytes[l1..l1 + 20]);
        broken.push(b'\n');
        broken.extend_from_slice(&bytes[l1 + entries[1].to_line().len() + 1..]);
        assert!(matches!(read_journal(&broken), Err(Error::CorruptJournal { first_bad_seq: 2 })));
    }
}
