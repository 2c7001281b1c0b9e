//! Append-only, hash-chained audit log.
//!
//! Each entry hashes `seq ‖ at ‖ actor ‖ action ‖ entity ‖ payload_digest ‖
//! prev_hash` with SHA-256 over a fixed binary layout: integers big-endian,
//! text as a u32 big-endian byte length followed by UTF-8, digests raw. The
//! genesis `prev_hash` is all zeros.
//!
//! On disk the log is newline-delimited JSON, one entry per line, fields in
//! the order above followed by the full payload. A line is only valid if it
//! is byte-identical to the canonical re-serialization of what it parses to.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::ids::UserId;
use crate::time::{serde_millis, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Hash256(pub [u8; 32]);

impl Hash256 {
    pub const ZERO: Hash256 = Hash256([0; 32]);

    pub fn of(bytes: &[u8]) -> Self {
        Hash256(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for Hash256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl FromStr for Hash256 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // lowercase only, so each digest has exactly one textual form
        if s.len() != 64 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(format!("expected 64 lowercase hex digits, got {s:?}"));
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| e.to_string())?;
        Ok(Hash256(out))
    }
}

impl Serialize for Hash256 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Hash256 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Who performed an operation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    /// Sweeps and cascades with no human session behind them.
    System,
    User(UserId),
}

impl Actor {
    pub const SYSTEM_NAME: &'static str = "SYSTEM";

    pub fn user_id(&self) -> Option<&UserId> {
        match self {
            Actor::System => None,
            Actor::User(id) => Some(id),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Actor::System => Self::SYSTEM_NAME,
            Actor::User(id) => id.as_str(),
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Actor {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Actor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Ok(if text == Self::SYSTEM_NAME {
            Actor::System
        } else {
            Actor::User(UserId::new(text))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub kind: String,
    pub id: String,
}

impl EntityRef {
    pub fn new(kind: impl Into<String>, id: impl fmt::Display) -> Self {
        Self {
            kind: kind.into(),
            id: id.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditEntry {
    pub seq: u64,
    #[serde(with = "serde_millis")]
    pub at: Timestamp,
    pub actor: Actor,
    pub action: String,
    pub entity: EntityRef,
    pub payload_digest: Hash256,
    pub prev_hash: Hash256,
    pub entry_hash: Hash256,
    /// Full operation payload; journal replay reads the effects from here.
    pub payload: serde_json::Value,
}

fn put_text(buf: &mut Vec<u8>, text: &str) {
    buf.extend_from_slice(&(text.len() as u32).to_be_bytes());
    buf.extend_from_slice(text.as_bytes());
}

/// Digest of the canonical payload serialization.
pub fn payload_digest(payload: &serde_json::Value) -> Hash256 {
    Hash256::of(&serde_json::to_vec(payload).expect("json values always serialize"))
}

pub fn compute_entry_hash(
    seq: u64,
    at: Timestamp,
    actor: &Actor,
    action: &str,
    entity: &EntityRef,
    payload_digest: &Hash256,
    prev_hash: &Hash256,
) -> Hash256 {
    let mut buf = Vec::with_capacity(160);
    buf.extend_from_slice(&seq.to_be_bytes());
    buf.extend_from_slice(&at.timestamp_millis().to_be_bytes());
    put_text(&mut buf, actor.as_str());
    put_text(&mut buf, action);
    put_text(&mut buf, &entity.kind);
    put_text(&mut buf, &entity.id);
    buf.extend_from_slice(&payload_digest.0);
    buf.extend_from_slice(&prev_hash.0);
    Hash256::of(&buf)
}

impl AuditEntry {
    /// Builds the entry that follows `prev` (or genesis when `prev` is `None`).
    pub fn chained(
        prev: Option<(u64, Hash256)>,
        at: Timestamp,
        actor: Actor,
        action: impl Into<String>,
        entity: EntityRef,
        payload: serde_json::Value,
    ) -> Self {
        let (prev_seq, prev_hash) = prev.unwrap_or((0, Hash256::ZERO));
        let seq = prev_seq + 1;
        let action = action.into();
        let digest = payload_digest(&payload);
        let entry_hash = compute_entry_hash(seq, at, &actor, &action, &entity, &digest, &prev_hash);
        Self {
            seq,
            at,
            actor,
            action,
            entity,
            payload_digest: digest,
            prev_hash,
            entry_hash,
            payload,
        }
    }

    pub fn recompute_hash(&self) -> Hash256 {
        compute_entry_hash(
            self.seq,
            self.at,
            &self.actor,
            &self.action,
            &self.entity,
            &self.payload_digest,
            &self.prev_hash,
        )
    }

    /// Canonical journal line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("audit entries always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub valid: bool,
    pub entries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_bad_seq: Option<u64>,
}

impl ChainReport {
    fn ok(entries: u64) -> Self {
        Self {
            valid: true,
            entries,
            first_bad_seq: None,
        }
    }

    fn bad(entries: u64, seq: u64) -> Self {
        Self {
            valid: false,
            entries,
            first_bad_seq: Some(seq),
        }
    }
}

/// Checks one entry against its expected position in the chain.
pub fn entry_is_sound(entry: &AuditEntry, expected_seq: u64, prev_hash: &Hash256) -> bool {
    entry.seq == expected_seq
        && entry.prev_hash == *prev_hash
        && payload_digest(&entry.payload) == entry.payload_digest
        && entry.recompute_hash() == entry.entry_hash
}

/// Verifies in-memory entries starting from genesis.
pub fn verify_entries<'a>(entries: impl IntoIterator<Item = &'a AuditEntry>) -> ChainReport {
    let mut prev = Hash256::ZERO;
    let mut count = 0;
    for entry in entries {
        count += 1;
        if !entry_is_sound(entry, count, &prev) {
            return ChainReport::bad(count, count);
        }
        prev = entry.entry_hash;
    }
    ChainReport::ok(count)
}

/// Parses one journal line, requiring canonical form.
pub fn parse_line(line: &[u8]) -> Option<AuditEntry> {
    let entry: AuditEntry = serde_json::from_slice(line).ok()?;
    (entry.to_line().as_bytes() == line).then_some(entry)
}

/// Strict verification of a serialized journal. Every line, including the
/// last, must be newline-terminated.
pub fn verify_journal_bytes(bytes: &[u8]) -> ChainReport {
    let mut prev = Hash256::ZERO;
    let mut seq = 0;
    let mut rest = bytes;
    while !rest.is_empty() {
        seq += 1;
        let Some(end) = rest.iter().position(|&b| b == b'\n') else {
            return ChainReport::bad(seq, seq);
        };
        let line = &rest[..end];
        rest = &rest[end + 1..];
        match parse_line(line) {
            Some(entry) if entry_is_sound(&entry, seq, &prev) => prev = entry.entry_hash,
            _ => return ChainReport::bad(seq, seq),
        }
    }
    ChainReport::ok(seq)
}

/// All entries for `entity`, in seq order.
pub fn trace<'a>(entries: impl IntoIterator<Item = &'a AuditEntry>, entity: &EntityRef) -> Vec<AuditEntry> {
    entries
        .into_iter()
        .filter(|e| &e.entity == entity)
        .cloned()
        .collect()
}
