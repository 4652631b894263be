//! Session outcomes and the per-session report.

use mocha_core::{MsgHeader, RobotId};
use serde::Serialize;

/// Why a session stopped making progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    /// An awaited reply never arrived.
    Timeout,
    /// The peer's configuration hash differs from ours.
    ConfigMismatch,
    /// The peer broke the exchange sequence.
    ProtocolViolation(String),
    /// A payload contradicted bytes already stored under the same header.
    ConsistencyFault(MsgHeader),
    /// The underlying transport closed mid-session.
    Disconnected,
}

impl FailReason {
    pub fn outcome(&self) -> SessionOutcome {
        match self {
            FailReason::Timeout => SessionOutcome::Timeout,
            FailReason::ConfigMismatch => SessionOutcome::ConfigMismatch,
            FailReason::ProtocolViolation(_)
            | FailReason::ConsistencyFault(_)
            | FailReason::Disconnected => SessionOutcome::Interrupted,
        }
    }
}

/// A session is `Complete` only when the client reached the end of the
/// interaction: COMM_END sent and ACK received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionOutcome {
    Complete,
    Interrupted,
    Timeout,
    ConfigMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub peer: RobotId,
    pub outcome: SessionOutcome,
    pub messages_committed: u32,
    pub bytes_received: u64,
    pub duration_s: f64,
    pub rtt_estimate_s: Option<f64>,
}
