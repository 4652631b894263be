//! Message identity: the 6-byte header that keys every message in the system.
//!
//! A header carries the producing robot id, the topic id, and the producer's
//! node-local timestamp split into whole seconds and a millisecond remainder.
//! The encoded form is fixed at six bytes, big-endian, so a full header list
//! for a team stays small enough to ship in a single frame.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Robot identifier, assigned positionally by the shared team configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub u8);

/// Topic identifier, positional within a single robot's topic list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicId(pub u8);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for TopicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// The (robot, topic) pair a message store entry is keyed by.
///
/// Ordering is `(rid, tid)` ascending, which fixes the order of header lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TopicKey {
    pub rid: RobotId,
    pub tid: TopicId,
}

impl TopicKey {
    pub fn new(rid: RobotId, tid: TopicId) -> Self {
        Self { rid, tid }
    }
}

impl fmt::Display for TopicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.rid, self.tid)
    }
}

/// Node-local production time: whole seconds plus a millisecond remainder.
///
/// Stamps are only ever compared between messages of the same robot, so no
/// cross-node clock agreement is required. `millis` is kept strictly below
/// 1000 even though the wire field is 16 bits wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    secs: u16,
    millis: u16,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum StampError {
    #[error("millisecond field {0} out of range (must be < 1000)")]
    InvalidMillis(u16),
    #[error("time {0} s out of the representable range [0, 65536)")]
    OutOfRange(f64),
}

impl Stamp {
    pub const ZERO: Stamp = Stamp { secs: 0, millis: 0 };

    pub fn new(secs: u16, millis: u16) -> Result<Self, StampError> {
        if millis >= 1000 {
            return Err(StampError::InvalidMillis(millis));
        }
        Ok(Self { secs, millis })
    }

    /// Splits a fractional second count into a stamp, truncating to whole
    /// milliseconds. Times at or beyond the 16-bit second wrap are rejected.
    pub fn from_secs_f64(t: f64) -> Result<Self, StampError> {
        if !t.is_finite() || t < 0.0 || t >= 65536.0 {
            return Err(StampError::OutOfRange(t));
        }
        let total_ms = (t * 1000.0).floor() as u64;
        let secs = total_ms / 1000;
        if secs > u16::MAX as u64 {
            return Err(StampError::OutOfRange(t));
        }
        Ok(Self {
            secs: secs as u16,
            millis: (total_ms % 1000) as u16,
        })
    }

    pub fn secs(&self) -> u16 {
        self.secs
    }

    pub fn millis(&self) -> u16 {
        self.millis
    }

    pub fn as_secs_f64(&self) -> f64 {
        self.secs as f64 + self.millis as f64 / 1000.0
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}s", self.secs, self.millis)
    }
}

/// Encoded size of a header on the wire.
pub const HEADER_LEN: usize = 6;

/// The system-wide message key: robot id, topic id, and production stamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MsgHeader {
    pub rid: RobotId,
    pub tid: TopicId,
    pub stamp: Stamp,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum HeaderDecodeError {
    #[error("header must be exactly {HEADER_LEN} bytes, got {0}")]
    WrongLength(usize),
    #[error("decoded millisecond field {0} out of range (must be < 1000)")]
    InvalidMillis(u16),
}

impl MsgHeader {
    pub fn new(rid: RobotId, tid: TopicId, stamp: Stamp) -> Self {
        Self { rid, tid, stamp }
    }

    pub fn key(&self) -> TopicKey {
        TopicKey::new(self.rid, self.tid)
    }

    /// Byte layout: rid, tid, seconds (big-endian u16), millis (big-endian u16).
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let s = self.stamp.secs.to_be_bytes();
        let ms = self.stamp.millis.to_be_bytes();
        [self.rid.0, self.tid.0, s[0], s[1], ms[0], ms[1]]
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, HeaderDecodeError> {
        if bytes.len() != HEADER_LEN {
            return Err(HeaderDecodeError::WrongLength(bytes.len()));
        }
        let secs = u16::from_be_bytes([bytes[2], bytes[3]]);
        let millis = u16::from_be_bytes([bytes[4], bytes[5]]);
        let stamp =
            Stamp::new(secs, millis).map_err(|_| HeaderDecodeError::InvalidMillis(millis))?;
        Ok(Self {
            rid: RobotId(bytes[0]),
            tid: TopicId(bytes[1]),
            stamp,
        })
    }
}

impl fmt::Display for MsgHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}@{}", self.rid, self.tid, self.stamp)
    }
}
