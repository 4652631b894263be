//! Core domain types for opportunistic gossip synchronization between
//! intermittently connected robots.
//!
//! This crate holds what every other component builds on: the 6-byte message
//! header and its bit-exact codec, the shared team configuration that assigns
//! robot/topic ids positionally, payload codecs, and the per-node message
//! store with insert, commit, and query semantics.

pub mod codec;
pub mod config;
pub mod header;
pub mod message;
pub mod store;

pub use codec::{CodecError, IdentityCodec, Lz4Codec, PayloadCodec};
pub use config::{ConfigError, RobotSpec, TeamConfig, TopicSpec, MAX_IDS};
pub use header::{
    HeaderDecodeError, MsgHeader, RobotId, Stamp, StampError, TopicId, TopicKey, HEADER_LEN,
};
pub use message::Message;
pub use store::{
    CommitError, CommitOutcome, InsertError, MessageStore, NotFound, StoreSnapshot,
    DEFAULT_HISTORY_CAPACITY,
};
