//! Shared team configuration.
//!
//! Every node loads the same configuration document, and robot/topic ids are
//! assigned positionally from it: `rid` is the robot's index in `robots`,
//! `tid` the topic's index in that robot's `topics`. Two nodes with identical
//! documents therefore agree on every id without negotiation; a short hash of
//! the document is exchanged at session start to catch divergence early.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::header::{RobotId, TopicId, TopicKey};

/// Hard limit on robots and on topics per robot, set by the 8-bit id fields.
pub const MAX_IDS: usize = 256;

/// One topic a robot publishes into the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSpec {
    pub name: String,
    /// Transfer priority; higher values are requested first during sync.
    pub priority: u8,
    /// Maximum local insert rate; inserts beyond it are throttled away.
    pub rate_hz: f64,
    /// Expected payload size, advisory only (workload sizing, reports).
    #[serde(default)]
    pub hint_bytes: u32,
}

/// One robot and its declared topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub name: String,
    pub topics: Vec<TopicSpec>,
}

/// The configuration document shared verbatim by every node of a team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamConfig {
    pub robots: Vec<RobotSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("team config parse error: {0}")]
    Parse(String),
    #[error("team has {0} robots, maximum is {MAX_IDS}")]
    TooManyRobots(usize),
    #[error("robot {robot:?} declares {count} topics, maximum is {MAX_IDS}")]
    TooManyTopics { robot: String, count: usize },
    #[error("duplicate robot name {0:?}")]
    DuplicateRobot(String),
    #[error("robot {robot:?} declares duplicate topic name {topic:?}")]
    DuplicateTopic { robot: String, topic: String },
    #[error("robot {robot:?} topic {topic:?} has non-positive rate_hz {rate}")]
    BadRate {
        robot: String,
        topic: String,
        rate: f64,
    },
    #[error("team config must declare at least one robot")]
    Empty,
}

impl TeamConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: TeamConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.robots.is_empty() {
            return Err(ConfigError::Empty);
        }
        if self.robots.len() > MAX_IDS {
            return Err(ConfigError::TooManyRobots(self.robots.len()));
        }
        let mut robot_names = std::collections::BTreeSet::new();
        for robot in &self.robots {
            if !robot_names.insert(robot.name.as_str()) {
                return Err(ConfigError::DuplicateRobot(robot.name.clone()));
            }
            if robot.topics.len() > MAX_IDS {
                return Err(ConfigError::TooManyTopics {
                    robot: robot.name.clone(),
                    count: robot.topics.len(),
                });
            }
            let mut topic_names = std::collections::BTreeSet::new();
            for topic in &robot.topics {
                if !topic_names.insert(topic.name.as_str()) {
                    return Err(ConfigError::DuplicateTopic {
                        robot: robot.name.clone(),
                        topic: topic.name.clone(),
                    });
                }
                if !(topic.rate_hz > 0.0) || !topic.rate_hz.is_finite() {
                    return Err(ConfigError::BadRate {
                        robot: robot.name.clone(),
                        topic: topic.name.clone(),
                        rate: topic.rate_hz,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    pub fn robot(&self, rid: RobotId) -> Option<&RobotSpec> {
        self.robots.get(rid.0 as usize)
    }

    pub fn rid_of(&self, name: &str) -> Option<RobotId> {
        self.robots
            .iter()
            .position(|r| r.name == name)
            .map(|i| RobotId(i as u8))
    }

    pub fn tid_of(&self, rid: RobotId, topic: &str) -> Option<TopicId> {
        self.robot(rid)?
            .topics
            .iter()
            .position(|t| t.name == topic)
            .map(|i| TopicId(i as u8))
    }

    pub fn topic(&self, key: TopicKey) -> Option<&TopicSpec> {
        self.robot(key.rid)?.topics.get(key.tid.0 as usize)
    }

    /// Number of topics robot `rid` provides.
    pub fn topic_count(&self, rid: RobotId) -> usize {
        self.robot(rid).map(|r| r.topics.len()).unwrap_or(0)
    }

    /// Total number of (robot, topic) keys in the system; every header list
    /// is at most this long.
    pub fn header_list_capacity(&self) -> usize {
        self.robots.iter().map(|r| r.topics.len()).sum()
    }

    pub fn contains_key(&self, key: TopicKey) -> bool {
        self.topic(key).is_some()
    }

    /// All keys in `(rid, tid)` ascending order.
    pub fn keys(&self) -> impl Iterator<Item = TopicKey> + '_ {
        self.robots.iter().enumerate().flat_map(|(ri, r)| {
            (0..r.topics.len()).map(move |ti| TopicKey::new(RobotId(ri as u8), TopicId(ti as u8)))
        })
    }

    /// Stable 8-byte digest of the structural content of the configuration.
    ///
    /// Computed over a canonical field encoding rather than the source text,
    /// so formatting and comments do not affect it.
    pub fn config_hash(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(b"mocha-team-config-v1");
        hasher.update((self.robots.len() as u16).to_be_bytes());
        for robot in &self.robots {
            hasher.update((robot.name.len() as u16).to_be_bytes());
            hasher.update(robot.name.as_bytes());
            hasher.update((robot.topics.len() as u16).to_be_bytes());
            for topic in &robot.topics {
                hasher.update((topic.name.len() as u16).to_be_bytes());
                hasher.update(topic.name.as_bytes());
                hasher.update([topic.priority]);
                hasher.update(topic.rate_hz.to_bits().to_be_bytes());
                hasher.update(topic.hint_bytes.to_be_bytes());
            }
        }
        let digest = hasher.finalize();
        u64::from_be_bytes(digest[..8].try_into().unwrap())
    }
}
