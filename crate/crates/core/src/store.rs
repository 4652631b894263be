//! Per-node key-value message store.
//!
//! Each node keeps, for every (robot, topic) key it has heard of, the newest
//! message plus a bounded ring of older retained versions. Data from every
//! robot is stored under that robot's id no matter which peer delivered it,
//! which is what lets a node store-and-forward third-party data.
//!
//! Old versions are not discarded immediately on update: a peer chain
//! A→B→C may deliver an older version of a key after a newer one has already
//! arrived by another path, and that older message must still be servable
//! until it ages out of the ring.
//!
//! All operations take `&self` and are individually atomic; readers proceed
//! concurrently and writers exclude each other. No operation ever holds the
//! store across a network wait.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::codec::{self, PayloadCodec};
use crate::config::TeamConfig;
use crate::header::{MsgHeader, RobotId, Stamp, TopicKey};
use crate::message::Message;

/// Default number of superseded versions retained per key.
pub const DEFAULT_HISTORY_CAPACITY: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InsertError {
    #[error("topic {0:?} is not declared for this robot")]
    UnknownTopic(String),
    #[error("insert throttled: topic rate limit exceeded")]
    Throttled,
    #[error("invalid insert time: {0}")]
    BadTime(#[from] crate::header::StampError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommitError {
    #[error("message key {0} is not part of the team configuration")]
    UnknownKey(TopicKey),
    #[error("header {0} already stored with different payload bytes")]
    ConsistencyFault(MsgHeader),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("no stored message with header {0}")]
pub struct NotFound(pub MsgHeader);

/// Result of committing a remotely received message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitOutcome {
    /// The message became the newest entry for its key.
    Committed,
    /// The message was equal to or older than what is already stored. It may
    /// still have been added to the retained history if unseen before.
    Stale,
}

#[derive(Debug, Clone)]
struct KeyEntry {
    newest: Message,
    /// Superseded versions, kept sorted by stamp ascending. Eviction drops
    /// the oldest stamp first.
    history: Vec<Message>,
}

#[derive(Debug, Clone, Copy)]
struct TokenBucket {
    tokens: f64,
    last_refill_s: f64,
}

impl TokenBucket {
    fn full() -> Self {
        Self {
            tokens: 1.0,
            last_refill_s: 0.0,
        }
    }

    /// Capacity-1 bucket refilling at `rate_hz` tokens per second.
    fn try_take(&mut self, now_s: f64, rate_hz: f64) -> bool {
        if now_s > self.last_refill_s {
            self.tokens = (self.tokens + (now_s - self.last_refill_s) * rate_hz).min(1.0);
            self.last_refill_s = now_s;
        }
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

struct StoreInner {
    entries: BTreeMap<TopicKey, KeyEntry>,
    /// One bucket per local topic, indexed by tid.
    throttle: Vec<TokenBucket>,
}

/// Full ordered dump of a store, for byte-level comparison in tests and
/// oracles. Entries are ordered by key; within a key the newest message comes
/// first, followed by retained history oldest-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreSnapshot {
    pub entries: Vec<(TopicKey, Vec<Message>)>,
}

pub struct MessageStore {
    owner: RobotId,
    config: Arc<TeamConfig>,
    codec: Arc<dyn PayloadCodec>,
    history_capacity: usize,
    inner: RwLock<StoreInner>,
}

impl MessageStore {
    /// Store with the identity payload codec and default retention.
    pub fn new(owner: RobotId, config: Arc<TeamConfig>) -> Self {
        Self::with_options(owner, config, codec::identity(), DEFAULT_HISTORY_CAPACITY)
    }

    pub fn with_options(
        owner: RobotId,
        config: Arc<TeamConfig>,
        codec: Arc<dyn PayloadCodec>,
        history_capacity: usize,
    ) -> Self {
        let local_topics = config.topic_count(owner);
        Self {
            owner,
            config,
            codec,
            history_capacity,
            inner: RwLock::new(StoreInner {
                entries: BTreeMap::new(),
                throttle: vec![TokenBucket::full(); local_topics],
            }),
        }
    }

    pub fn owner(&self) -> RobotId {
        self.owner
    }

    pub fn config(&self) -> &Arc<TeamConfig> {
        &self.config
    }

    pub fn codec(&self) -> &Arc<dyn PayloadCodec> {
        &self.codec
    }

    /// Insert a locally produced message under one of the owner's topics.
    ///
    /// The raw payload is compressed by the configured codec and the header
    /// is stamped from `now`. A capacity-1 token bucket per topic enforces the
    /// configured rate; a second insert inside the refill window (including
    /// one landing in the same millisecond) is rejected as `Throttled` and
    /// leaves the store untouched.
    pub fn insert_local(
        &self,
        topic: &str,
        raw_payload: &[u8],
        now: Stamp,
    ) -> Result<MsgHeader, InsertError> {
        let tid = self
            .config
            .tid_of(self.owner, topic)
            .ok_or_else(|| InsertError::UnknownTopic(topic.to_string()))?;
        let spec = self
            .config
            .topic(TopicKey::new(self.owner, tid))
            .expect("tid resolved from config");
        let header = MsgHeader::new(self.owner, tid, now);
        let key = header.key();

        let mut inner = self.inner.write().unwrap();
        // Timestamps of a topic must strictly increase; a same-millisecond
        // (or earlier-clock) insert is dropped with throttle semantics.
        if let Some(entry) = inner.entries.get(&key) {
            if now <= entry.newest.header.stamp {
                return Err(InsertError::Throttled);
            }
        }
        if !inner.throttle[tid.0 as usize].try_take(now.as_secs_f64(), spec.rate_hz) {
            return Err(InsertError::Throttled);
        }
        let message = Message::new(header, spec.priority, self.codec.compress(raw_payload));
        Self::promote(
            &mut inner.entries,
            key,
            message,
            self.history_capacity,
        );
        Ok(header)
    }

    /// Commit a message received from a peer. The message may belong to any
    /// robot in the team, including third parties being forwarded.
    pub fn commit_remote(&self, msg: Message) -> Result<CommitOutcome, CommitError> {
        let key = msg.header.key();
        if !self.config.contains_key(key) {
            return Err(CommitError::UnknownKey(key));
        }
        let mut inner = self.inner.write().unwrap();
        let Some(entry) = inner.entries.get_mut(&key) else {
            inner.entries.insert(
                key,
                KeyEntry {
                    newest: msg,
                    history: Vec::new(),
                },
            );
            return Ok(CommitOutcome::Committed);
        };

        if msg.header == entry.newest.header {
            return if msg.payload == entry.newest.payload {
                Ok(CommitOutcome::Stale)
            } else {
                Err(CommitError::ConsistencyFault(msg.header))
            };
        }
        if msg.header.stamp > entry.newest.header.stamp {
            let displaced = std::mem::replace(&mut entry.newest, msg);
            Self::retain(entry, displaced, self.history_capacity);
            return Ok(CommitOutcome::Committed);
        }
        // Older than newest: retain it unless an identical header is already
        // present, in which case payload bytes must agree.
        if let Some(existing) = entry.history.iter().find(|m| m.header == msg.header) {
            return if existing.payload == msg.payload {
                Ok(CommitOutcome::Stale)
            } else {
                Err(CommitError::ConsistencyFault(msg.header))
            };
        }
        Self::retain(entry, msg, self.history_capacity);
        Ok(CommitOutcome::Stale)
    }

    fn promote(
        entries: &mut BTreeMap<TopicKey, KeyEntry>,
        key: TopicKey,
        msg: Message,
        capacity: usize,
    ) {
        match entries.get_mut(&key) {
            None => {
                entries.insert(
                    key,
                    KeyEntry {
                        newest: msg,
                        history: Vec::new(),
                    },
                );
            }
            Some(entry) => {
                debug_assert!(msg.header.stamp > entry.newest.header.stamp);
                let displaced = std::mem::replace(&mut entry.newest, msg);
                Self::retain(entry, displaced, capacity);
            }
        }
    }

    fn retain(entry: &mut KeyEntry, msg: Message, capacity: usize) {
        if capacity == 0 {
            return;
        }
        let pos = entry
            .history
            .partition_point(|m| m.header.stamp <= msg.header.stamp);
        entry.history.insert(pos, msg);
        while entry.history.len() > capacity {
            entry.history.remove(0);
        }
    }

    /// One most-recent header per key present in the store, in `(rid, tid)`
    /// ascending order.
    pub fn latest_headers(&self) -> Vec<MsgHeader> {
        let inner = self.inner.read().unwrap();
        inner.entries.values().map(|e| e.newest.header).collect()
    }

    /// Fetch the stored message whose header matches `h` exactly, whether it
    /// is the newest version or a retained older one.
    pub fn get_payload(&self, h: &MsgHeader) -> Result<Message, NotFound> {
        let inner = self.inner.read().unwrap();
        let entry = inner.entries.get(&h.key()).ok_or(NotFound(*h))?;
        if entry.newest.header == *h {
            return Ok(entry.newest.clone());
        }
        entry
            .history
            .iter()
            .find(|m| m.header == *h)
            .cloned()
            .ok_or(NotFound(*h))
    }

    /// The newest message for `key`, if any.
    pub fn newest(&self, key: TopicKey) -> Option<Message> {
        let inner = self.inner.read().unwrap();
        inner.entries.get(&key).map(|e| e.newest.clone())
    }

    /// Newest message per key, for convergence checks and reporting.
    pub fn newest_map(&self) -> BTreeMap<TopicKey, Message> {
        let inner = self.inner.read().unwrap();
        inner
            .entries
            .iter()
            .map(|(k, e)| (*k, e.newest.clone()))
            .collect()
    }

    pub fn snapshot(&self) -> StoreSnapshot {
        let inner = self.inner.read().unwrap();
        StoreSnapshot {
            entries: inner
                .entries
                .iter()
                .map(|(k, e)| {
                    let mut msgs = Vec::with_capacity(1 + e.history.len());
                    msgs.push(e.newest.clone());
                    msgs.extend(e.history.iter().cloned());
                    (*k, msgs)
                })
                .collect(),
        }
    }

    pub fn key_count(&self) -> usize {
        self.inner.read().unwrap().entries.len()
    }
}

impl std::fmt::Debug for MessageStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MessageStore")
            .field("owner", &self.owner)
            .field("keys", &self.key_count())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RobotSpec, TopicSpec};
    use crate::header::TopicId;

    fn config() -> Arc<TeamConfig> {
        let topic = |name: &str, priority: u8, rate_hz: f64| TopicSpec {
            name: name.into(),
            priority,
            rate_hz,
            hint_bytes: 0,
        };
        Arc::new(TeamConfig {
            robots: vec![
                RobotSpec {
                    name: "a".into(),
                    topics: vec![topic("pose", 3, 1.0), topic("map", 1, 1.0)],
                },
                RobotSpec {
                    name: "b".into(),
                    topics: vec![topic("pose", 3, 1.0)],
                },
                RobotSpec {
                    name: "c".into(),
                    topics: vec![topic("pose", 3, 1.0)],
                },
            ],
        })
    }

    fn msg(rid: u8, tid: u8, secs: u16, millis: u16, payload: &[u8]) -> Message {
        Message::new(
            MsgHeader::new(RobotId(rid), TopicId(tid), Stamp::new(secs, millis).unwrap()),
            1,
            payload.to_vec(),
        )
    }

    #[test]
    fn insert_local_builds_header_and_updates_newest() {
        let store = MessageStore::new(RobotId(1), config());
        let h = store
            .insert_local("pose", b"xy", Stamp::from_secs_f64(10.5).unwrap())
            .unwrap();
        assert_eq!(h.rid, RobotId(1));
        assert_eq!(h.tid, TopicId(0));
        assert_eq!((h.stamp.secs(), h.stamp.millis()), (10, 500));
        let newest = store.newest(h.key()).unwrap();
        assert_eq!(newest.payload, b"xy");
        assert_eq!(newest.priority, 3);
    }

    #[test]
    fn insert_local_rejects_unknown_topic() {
        let store = MessageStore::new(RobotId(1), config());
        let err = store
            .insert_local("xyz", b"", Stamp::ZERO)
            .unwrap_err();
        assert_eq!(err, InsertError::UnknownTopic("xyz".into()));
    }

    #[test]
    fn insert_local_throttles_within_rate_window() {
        // Oracle: capacity-1 token bucket refilling at 1 token/s. After the
        // 10.5 s insert the bucket is empty; at 10.8 s it holds 0.3 tokens.
        let store = MessageStore::new(RobotId(1), config());
        store
            .insert_local("pose", b"1", Stamp::from_secs_f64(10.5).unwrap())
            .unwrap();
        let err = store
            .insert_local("pose", b"2", Stamp::from_secs_f64(10.8).unwrap())
            .unwrap_err();
        assert_eq!(err, InsertError::Throttled);
        // At 11.5 s a full token is back.
        store
            .insert_local("pose", b"3", Stamp::from_secs_f64(11.5).unwrap())
            .unwrap();
        assert_eq!(store.newest(TopicKey::new(RobotId(1), TopicId(0))).unwrap().payload, b"3");
    }

    #[test]
    fn insert_local_rejects_same_millisecond() {
        let store = MessageStore::new(RobotId(1), config());
        let now = Stamp::new(10, 500).unwrap();
        store.insert_local("pose", b"1", now).unwrap();
        assert_eq!(
            store.insert_local("pose", b"2", now).unwrap_err(),
            InsertError::Throttled
        );
    }

    #[test]
    fn commit_newer_replaces_and_retains_old() {
        let store = MessageStore::new(RobotId(0), config());
        let old = msg(2, 0, 100, 0, b"old");
        let new = msg(2, 0, 100, 600, b"new");
        assert_eq!(store.commit_remote(old.clone()).unwrap(), CommitOutcome::Committed);
        assert_eq!(store.commit_remote(new.clone()).unwrap(), CommitOutcome::Committed);
        assert_eq!(store.newest(new.header.key()).unwrap(), new);
        // Old version is still servable.
        assert_eq!(store.get_payload(&old.header).unwrap(), old);
    }

    #[test]
    fn commit_is_idempotent() {
        let store = MessageStore::new(RobotId(0), config());
        let m = msg(2, 0, 100, 0, b"x");
        assert_eq!(store.commit_remote(m.clone()).unwrap(), CommitOutcome::Committed);
        let before = store.snapshot();
        assert_eq!(store.commit_remote(m).unwrap(), CommitOutcome::Stale);
        assert_eq!(store.snapshot(), before);
    }

    #[test]
    fn commit_older_is_stale_but_retained() {
        // Chain A→B→C: C already holds the newer version via another path
        // when the older one arrives from a lagging peer. Nothing is lost.
        let store = MessageStore::new(RobotId(0), config());
        let newer = msg(2, 0, 100, 600, b"new");
        let older = msg(2, 0, 100, 0, b"old");
        store.commit_remote(newer.clone()).unwrap();
        assert_eq!(store.commit_remote(older.clone()).unwrap(), CommitOutcome::Stale);
        assert_eq!(store.newest(newer.header.key()).unwrap(), newer);
        assert_eq!(store.get_payload(&older.header).unwrap(), older);
    }

    #[test]
    fn commit_same_header_different_payload_is_a_fault() {
        let store = MessageStore::new(RobotId(0), config());
        let m = msg(2, 0, 100, 0, b"x");
        store.commit_remote(m.clone()).unwrap();
        let mut forged = m.clone();
        forged.payload = b"y".to_vec();
        assert_eq!(
            store.commit_remote(forged).unwrap_err(),
            CommitError::ConsistencyFault(m.header)
        );
        // Also for retained history entries.
        let newer = msg(2, 0, 101, 0, b"n");
        store.commit_remote(newer).unwrap();
        let mut forged_old = m;
        forged_old.payload = b"z".to_vec();
        assert!(matches!(
            store.commit_remote(forged_old),
            Err(CommitError::ConsistencyFault(_))
        ));
    }

    #[test]
    fn commit_rejects_keys_outside_config() {
        let store = MessageStore::new(RobotId(0), config());
        let err = store.commit_remote(msg(9, 0, 1, 0, b"")).unwrap_err();
        assert_eq!(err, CommitError::UnknownKey(TopicKey::new(RobotId(9), TopicId(0))));
    }

    #[test]
    fn latest_headers_ordered_one_per_key() {
        let store = MessageStore::new(RobotId(0), config());
        assert!(store.latest_headers().is_empty());
        store.commit_remote(msg(2, 0, 5, 0, b"")).unwrap();
        store.commit_remote(msg(1, 0, 9, 0, b"")).unwrap();
        store.insert_local("pose", b"", Stamp::new(1, 0).unwrap()).unwrap();
        store.insert_local("map", b"", Stamp::new(1, 0).unwrap()).unwrap();
        let keys: Vec<TopicKey> = store.latest_headers().iter().map(|h| h.key()).collect();
        assert_eq!(
            keys,
            vec![
                TopicKey::new(RobotId(0), TopicId(0)),
                TopicKey::new(RobotId(0), TopicId(1)),
                TopicKey::new(RobotId(1), TopicId(0)),
                TopicKey::new(RobotId(2), TopicId(0)),
            ]
        );
        assert!(store.latest_headers().len() <= store.config().header_list_capacity());
    }

    #[test]
    fn get_payload_unknown_header_not_found() {
        let store = MessageStore::new(RobotId(0), config());
        let h = MsgHeader::new(RobotId(2), TopicId(0), Stamp::ZERO);
        assert_eq!(store.get_payload(&h).unwrap_err(), NotFound(h));
        // A different stamp on a known key is also not found.
        store.commit_remote(msg(2, 0, 1, 0, b"")).unwrap();
        assert!(store.get_payload(&h).is_err());
    }

    #[test]
    fn history_ring_evicts_oldest_first() {
        let store =
            MessageStore::with_options(RobotId(0), config(), codec::identity(), 3);
        for s in 0..6u16 {
            store.commit_remote(msg(2, 0, s, 0, &[s as u8])).unwrap();
        }
        // Newest is s=5; ring holds s=2,3,4 (0 and 1 evicted oldest-first).
        let key = TopicKey::new(RobotId(2), TopicId(0));
        assert_eq!(store.newest(key).unwrap().header.stamp.secs(), 5);
        for s in 0..2u16 {
            let h = MsgHeader::new(RobotId(2), TopicId(0), Stamp::new(s, 0).unwrap());
            assert!(store.get_payload(&h).is_err());
        }
        for s in 2..5u16 {
            let h = MsgHeader::new(RobotId(2), TopicId(0), Stamp::new(s, 0).unwrap());
            assert!(store.get_payload(&h).is_ok());
        }
    }

    #[test]
    fn store_and_forward_serves_third_party_data() {
        let store = MessageStore::new(RobotId(0), config());
        let third_party = msg(2, 0, 7, 0, b"relay me");
        store.commit_remote(third_party.clone()).unwrap();
        assert_eq!(store.get_payload(&third_party.header).unwrap(), third_party);
    }
}
