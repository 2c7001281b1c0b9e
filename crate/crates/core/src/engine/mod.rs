//! The engine: one commit point over the entity store and the journal.
//!
//! Every mutating call runs inside [`Engine::mutate`], which holds the writer
//! lock, works on an O(1) clone of the store, and on success appends the
//! resulting audit entries to the journal with a single write before
//! publishing the new store. A failed journal write poisons the engine; the
//! only way forward is to reload from disk.

mod assets;
mod incidents;
mod permits;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use assets::ContractorFilter;
pub use incidents::{IncidentFilter, IncidentReported};
pub use permits::PermitFilter;

use crate::access::{decide, new_token, role_permits, Action, CredentialHash, Decision, DenyReason, Role, Session, User};
use crate::audit::{verify_entries, verify_journal_bytes, Actor, AuditEntry, ChainReport, EntityRef, Hash256};
use crate::error::{Error, Result};
use crate::ids::UserId;
use crate::journal::{BatchPos, JournalSink, MemoryJournal, Payload};
use crate::metrics::{compare_pipelines, incident_stats, stage_durations, PipelineReport, StageTiming};
use crate::incidents::IncidentCategory;
use crate::store::{Effect, Store};
use crate::time::{Clock, Timestamp};
use crate::zones::{PermitRequestView, ZoneLayout};

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub session_ttl: Duration,
    /// How early before `valid_from` a permit may be activated.
    pub activation_grace: Duration,
    /// Optional contractor safety-rating gate for eligibility; off by default.
    pub min_safety_rating: Option<u8>,
    /// Seed for salts and session tokens; OS entropy when `None`.
    pub seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            session_ttl: Duration::hours(8),
            activation_grace: Duration::zero(),
            min_safety_rating: None,
            seed: None,
        }
    }
}

struct Writer {
    sink: Box<dyn JournalSink>,
    poisoned: bool,
    last: Option<(u64, Hash256)>,
}

struct Pending {
    op: &'static str,
    actor: Actor,
    action: String,
    entity: EntityRef,
    input: serde_json::Value,
    effects: Vec<Effect>,
}

/// Working state of one commit.
pub(crate) struct Tx {
    pub store: Store,
    pub now: Timestamp,
    op: &'static str,
    pending: Vec<Pending>,
}

impl Tx {
    /// Records one audit entry and applies its effects to the working store.
    pub fn emit(&mut self, actor: Actor, action: impl Into<String>, entity: EntityRef, input: serde_json::Value, effects: Vec<Effect>) {
        for effect in &effects {
            self.store.apply(effect.clone());
        }
        self.pending.push(Pending {
            op: self.op,
            actor,
            action: action.into(),
            entity,
            input,
            effects,
        });
    }
}

fn input_of(value: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).expect("operation inputs serialize")
}

pub(crate) fn check_version(kind: &'static str, id: impl ToString, expected: u64, actual: u64) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::VersionConflict {
            kind,
            id: id.to_string(),
            expected,
            actual,
        })
    }
}

pub struct Engine {
    clock: Arc<dyn Clock>,
    config: EngineConfig,
    state: RwLock<Store>,
    log: RwLock<Vec<Arc<AuditEntry>>>,
    writer: Mutex<Writer>,
    rng: Mutex<ChaCha8Rng>,
    sessions: RwLock<HashMap<String, Session>>,
    journal_path: Option<PathBuf>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Engine {
    /// An engine whose journal lives only in memory.
    pub fn in_memory(clock: Arc<dyn Clock>, config: EngineConfig) -> Self {
        Self::restore(clock, config, Store::default(), Vec::new(), Box::new(MemoryJournal), None)
    }

    /// Assembles an engine from already-loaded state. `entries` must be the
    /// verified journal that produced `store`.
    pub fn restore(
        clock: Arc<dyn Clock>,
        config: EngineConfig,
        store: Store,
        entries: Vec<AuditEntry>,
        sink: Box<dyn JournalSink>,
        journal_path: Option<PathBuf>,
    ) -> Self {
        let rng = match config.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_entropy(),
        };
        let last = entries.last().map(|e| (e.seq, e.entry_hash));
        Self {
            clock,
            config,
            state: RwLock::new(store),
            log: RwLock::new(entries.into_iter().map(Arc::new).collect()),
            writer: Mutex::new(Writer {
                sink,
                poisoned: false,
                last,
            }),
            rng: Mutex::new(rng),
            sessions: RwLock::new(HashMap::new()),
            journal_path,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    /// Immutable view of the current state.
    pub fn snapshot(&self) -> Store {
        self.state.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// State plus the chain head it corresponds to, taken atomically.
    pub fn checkpoint(&self) -> (Store, Option<(u64, Hash256)>) {
        let writer = lock(&self.writer);
        (self.snapshot(), writer.last)
    }

    pub fn is_poisoned(&self) -> bool {
        lock(&self.writer).poisoned
    }

    /// Runs `f` as one all-or-nothing commit. Overdue permits are expired
    /// first, in the same batch, so guards never see a stale permit; if `f`
    /// fails the expiries are still committed on their own.
    pub(crate) fn mutate<T>(&self, op: &'static str, f: impl FnOnce(&mut Tx) -> Result<T>) -> Result<T> {
        let mut writer = lock(&self.writer);
        if writer.poisoned {
            return Err(Error::Poisoned);
        }
        let mut tx = Tx {
            store: self.snapshot(),
            now: self.clock.now(),
            op: "permit.expire",
            pending: Vec::new(),
        };
        permits::sweep(&mut tx);
        let swept = tx.store.clone();
        let swept_len = tx.pending.len();
        tx.op = op;
        match f(&mut tx) {
            Ok(value) => {
                self.commit(&mut writer, tx.store, tx.now, tx.pending)?;
                Ok(value)
            }
            Err(e) => {
                tx.pending.truncate(swept_len);
                self.commit(&mut writer, swept, tx.now, tx.pending)?;
                Err(e)
            }
        }
    }

    fn commit(&self, writer: &mut Writer, store: Store, at: Timestamp, pending: Vec<Pending>) -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let size = pending.len() as u32;
        let mut prev = writer.last;
        let mut entries = Vec::with_capacity(pending.len());
        let mut bytes = Vec::new();
        for (index, p) in pending.into_iter().enumerate() {
            let payload = Payload {
                op: p.op.to_owned(),
                batch: BatchPos {
                    index: index as u32,
                    size,
                },
                input: p.input,
                effects: p.effects,
            };
            let payload = serde_json::to_value(&payload)?;
            let entry = AuditEntry::chained(prev, at, p.actor, p.action, p.entity, payload);
            bytes.extend_from_slice(entry.to_line().as_bytes());
            bytes.push(b'\n');
            prev = Some((entry.seq, entry.entry_hash));
            entries.push(Arc::new(entry));
        }
        if let Err(e) = writer.sink.append(&bytes) {
            writer.poisoned = true;
            tracing::error!(error = %e, "journal append failed; engine poisoned");
            return Err(e.into());
        }
        writer.last = prev;
        *self.state.write().unwrap_or_else(|e| e.into_inner()) = store;
        self.log.write().unwrap_or_else(|e| e.into_inner()).extend(entries);
        Ok(())
    }

    // ---- sessions and authorization ----

    fn session_of(&self, token: &str) -> Option<Session> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(token)
            .cloned()
    }

    /// Pure permission-matrix lookup for a bearer token; never errors.
    pub fn authorize(&self, token: &str, action: Action) -> Decision {
        let session = self.session_of(token);
        let store = self.snapshot();
        let user = session.as_ref().and_then(|s| store.user(&s.user_id));
        decide(session.as_ref(), user, action, self.clock.now())
    }

    fn resolve(&self, store: &Store, token: &str, now: Timestamp) -> Result<User> {
        let session = self.session_of(token);
        let user = session.as_ref().and_then(|s| store.user(&s.user_id));
        // any action works here; only the session checks can fail for ADMIN
        let decision = decide(session.as_ref(), user, Action::ReportsView, now);
        match (decision.reason, user) {
            (Some(DenyReason::RoleNotPermitted) | None, Some(user)) => Ok(user.clone()),
            (Some(reason), _) => Err(Error::Unauthenticated(reason)),
            (None, None) => Err(Error::Unauthenticated(DenyReason::UnknownSession)),
        }
    }

    /// The user behind a live session.
    pub fn authenticate(&self, token: &str) -> Result<User> {
        self.resolve(&self.snapshot(), token, self.clock.now())
    }

    /// Authenticates and checks `action` against the matrix.
    pub fn require(&self, token: &str, action: Action) -> Result<User> {
        let user = self.authenticate(token)?;
        permit_or_deny(&user, action)?;
        Ok(user)
    }

    pub(crate) fn actor_in(&self, tx: &Tx, token: &str, action: Action) -> Result<User> {
        let user = self.resolve(&tx.store, token, tx.now)?;
        permit_or_deny(&user, action)?;
        Ok(user)
    }

    pub(crate) fn user_in(&self, tx: &Tx, token: &str) -> Result<User> {
        self.resolve(&tx.store, token, tx.now)
    }

    pub fn session(&self, token: &str) -> Option<Session> {
        self.session_of(token)
    }

    pub fn login(&self, name: &str, credential: &str) -> Result<Session> {
        let store = self.snapshot();
        let user = store
            .users()
            .find(|u| u.name == name && u.credential_hash.matches(credential))
            .ok_or(Error::BadCredentials)?;
        if !user.active {
            return Err(Error::InactiveUser);
        }
        let now = self.clock.now();
        let token = new_token(&mut *lock(&self.rng));
        let session = Session {
            token: token.clone(),
            user_id: user.user_id.clone(),
            issued_at: now,
            expires_at: now + self.config.session_ttl,
        };
        let mut sessions = self.sessions.write().unwrap_or_else(|e| e.into_inner());
        sessions.retain(|_, s| !s.is_expired(now));
        sessions.insert(token, session.clone());
        Ok(session)
    }

    pub fn logout(&self, token: &str) {
        self.sessions.write().unwrap_or_else(|e| e.into_inner()).remove(token);
    }

    // ---- users ----

    fn new_user(&self, store: &Store, name: &str, role: Role, credential: &str) -> Result<User> {
        if name.trim().is_empty() {
            return Err(Error::Validation("name must not be empty".into()));
        }
        if credential.is_empty() {
            return Err(Error::Validation("credential must not be empty".into()));
        }
        if store.users().any(|u| u.name == name && u.role == role) {
            return Err(Error::DuplicateName { name: name.into() });
        }
        Ok(User {
            user_id: UserId::from_ordinal(store.user_count() + 1),
            name: name.into(),
            role,
            active: true,
            credential_hash: CredentialHash::derive(credential, &mut *lock(&self.rng)),
        })
    }

    /// Creates the first ADMIN of an empty store, as SYSTEM.
    pub fn bootstrap_admin(&self, name: &str, credential: &str) -> Result<User> {
        self.mutate("user.bootstrap", |tx| {
            if tx.store.user_count() > 0 {
                return Err(Error::Validation("users already exist".into()));
            }
            let user = self.new_user(&tx.store, name, Role::Admin, credential)?;
            tx.emit(
                Actor::System,
                "user.bootstrap",
                EntityRef::new("user", &user.user_id),
                serde_json::json!({ "name": name, "role": Role::Admin }),
                vec![Effect::User(user.clone())],
            );
            Ok(user)
        })
    }

    pub fn create_user(&self, token: &str, name: &str, role: Role, credential: &str) -> Result<User> {
        self.mutate("user.create", |tx| {
            let admin = self.actor_in(tx, token, Action::UserManage)?;
            let user = self.new_user(&tx.store, name, role, credential)?;
            tx.emit(
                Actor::User(admin.user_id),
                "user.create",
                EntityRef::new("user", &user.user_id),
                serde_json::json!({ "name": name, "role": role }),
                vec![Effect::User(user.clone())],
            );
            Ok(user)
        })
    }

    pub fn set_user_active(&self, token: &str, user_id: &UserId, active: bool) -> Result<User> {
        self.mutate("user.update", |tx| {
            let admin = self.actor_in(tx, token, Action::UserManage)?;
            let mut user = tx
                .store
                .user(user_id)
                .cloned()
                .ok_or_else(|| Error::not_found("user", user_id))?;
            user.active = active;
            tx.emit(
                Actor::User(admin.user_id),
                "user.update",
                EntityRef::new("user", user_id),
                serde_json::json!({ "active": active }),
                vec![Effect::User(user.clone())],
            );
            Ok(user)
        })
    }

    pub fn users(&self) -> Vec<User> {
        self.snapshot().users().cloned().collect()
    }

    // ---- zones ----

    /// Replaces the zone layout. Refused when an entity names a zone the new
    /// layout drops, or when APPROVED/ACTIVE permits would conflict under it.
    pub fn load_zones(&self, token: &str, layout: ZoneLayout) -> Result<()> {
        self.mutate("zones.load", |tx| {
            let admin = self.actor_in(tx, token, Action::ZonesManage)?;
            install(tx, Actor::User(admin.user_id), layout)
        })
    }

    /// Startup variant of [`Self::load_zones`], recorded as SYSTEM. A layout
    /// equal to the current one is a no-op.
    pub fn install_zones(&self, layout: ZoneLayout) -> Result<()> {
        self.mutate("zones.load", |tx| {
            if *tx.store.zones() == layout {
                return Ok(());
            }
            install(tx, Actor::System, layout)
        })
    }

    pub fn zones(&self) -> Arc<ZoneLayout> {
        Arc::new(self.snapshot().zones().clone())
    }

    // ---- audit ----

    pub fn last_seq(&self) -> u64 {
        lock(&self.writer).last.map_or(0, |(seq, _)| seq)
    }

    pub fn audit_entries(&self) -> Vec<Arc<AuditEntry>> {
        self.log.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn trace(&self, entity: &EntityRef) -> Vec<AuditEntry> {
        let log = self.log.read().unwrap_or_else(|e| e.into_inner());
        crate::audit::trace(log.iter().map(|e| e.as_ref()), entity)
    }

    /// Verifies the journal of record: the file when there is one, otherwise
    /// the in-memory log.
    pub fn verify_chain(&self) -> Result<ChainReport> {
        match &self.journal_path {
            Some(path) => {
                let _writer = lock(&self.writer);
                let bytes = match std::fs::read(path) {
                    Ok(b) => b,
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
                    Err(e) => return Err(e.into()),
                };
                Ok(verify_journal_bytes(&bytes))
            }
            None => {
                let log = self.log.read().unwrap_or_else(|e| e.into_inner());
                Ok(verify_entries(log.iter().map(|e| e.as_ref())))
            }
        }
    }

    // ---- reports ----

    pub fn pipeline_report(&self, from: Timestamp, to: Timestamp, baseline: &[StageTiming]) -> Result<PipelineReport> {
        let digital: Vec<StageTiming> = {
            let log = self.log.read().unwrap_or_else(|e| e.into_inner());
            stage_durations(log.iter().map(|e| e.as_ref()), from, to)?
                .into_iter()
                .map(|(stage, duration)| StageTiming { stage, duration })
                .collect()
        };
        compare_pipelines(baseline, &digital)
    }

    pub fn incident_report(&self) -> std::collections::BTreeMap<IncidentCategory, f64> {
        let incidents: Vec<_> = self.snapshot().incidents().cloned().collect();
        incident_stats(&incidents)
    }
}

fn permit_or_deny(user: &User, action: Action) -> Result<()> {
    if role_permits(user.role, action) {
        Ok(())
    } else {
        Err(Error::Unauthorized(action))
    }
}

fn install(tx: &mut Tx, actor: Actor, layout: ZoneLayout) -> Result<()> {
    let store = &tx.store;
    let referenced = store
        .machines()
        .map(|m| &m.zone_id)
        .chain(store.permits().map(|p| &p.zone_id))
        .chain(store.incidents().map(|i| &i.zone_id));
    for zone_id in referenced {
        if !layout.contains_zone(zone_id) {
            return Err(Error::InvalidZone {
                zone_id: zone_id.to_string(),
                reason: "still referenced; the new layout drops it".into(),
            });
        }
    }
    let live = store.live_views();
    for (i, p) in live.iter().enumerate() {
        let candidate = PermitRequestView {
            permit_type: p.permit_type,
            zone_id: p.zone_id.clone(),
            valid_from: p.valid_from,
            valid_to: p.valid_to,
        };
        if let Some(c) = layout.permit_conflicts(&candidate, &live[i + 1..]).first() {
            return Err(Error::InvalidZone {
                zone_id: p.zone_id.to_string(),
                reason: format!("{} would conflict with {} ({})", p.permit_id, c.permit_id, c.rule),
            });
        }
    }
    tx.emit(
        actor,
        "zones.load",
        EntityRef::new("zones", "layout"),
        serde_json::Value::Null,
        vec![Effect::Zones(layout)],
    );
    Ok(())
}

