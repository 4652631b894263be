//! Client role of the synchronization exchange.
//!
//! The client drives the whole sequence: it requests the server's header
//! list, diffs it against its own store, then requests the missing payloads
//! one at a time — each received payload is committed before the next request
//! goes out — and finally closes with COMM_END / ACK. A session object is a
//! pure state machine; the caller owns all I/O and clocks.

use std::collections::VecDeque;
use std::sync::Arc;

use mocha_core::{CommitError, CommitOutcome, Message, MessageStore, MsgHeader, RobotId, TeamConfig};

use crate::diff::diff_headers;
use crate::report::{FailReason, SessionOutcome, SessionReport};
use crate::wire::WireFrame;

#[derive(Debug)]
enum Phase {
    Idle,
    AwaitHeaderList,
    Transfer {
        awaiting: MsgHeader,
        pending: VecDeque<MsgHeader>,
    },
    Ending,
    Done,
    Failed(FailReason),
}

pub struct ClientSession {
    cfg: Arc<TeamConfig>,
    self_rid: RobotId,
    peer: RobotId,
    nonce: u32,
    phase: Phase,
    requested_count: usize,
    committed_count: u32,
    bytes_received: u64,
    started_at: f64,
    ended_at: Option<f64>,
    list_requested_at: f64,
    rtt: Option<f64>,
}

impl ClientSession {
    pub fn new(cfg: Arc<TeamConfig>, self_rid: RobotId, peer: RobotId, nonce: u32) -> Self {
        Self {
            cfg,
            self_rid,
            peer,
            nonce,
            phase: Phase::Idle,
            requested_count: 0,
            committed_count: 0,
            bytes_received: 0,
            started_at: 0.0,
            ended_at: None,
            list_requested_at: 0.0,
            rtt: None,
        }
    }

    pub fn nonce(&self) -> u32 {
        self.nonce
    }

    pub fn peer(&self) -> RobotId {
        self.peer
    }

    /// Begin the interaction. Returns the REQ_HEADER_LIST frame to send.
    pub fn start(&mut self, now_s: f64) -> WireFrame {
        assert!(matches!(self.phase, Phase::Idle), "session already started");
        self.started_at = now_s;
        self.list_requested_at = now_s;
        self.phase = Phase::AwaitHeaderList;
        WireFrame::ReqHeaderList {
            config_hash: self.cfg.config_hash(),
        }
    }

    /// Feed one decoded frame received from the server. Returns the next
    /// frame to send, or `None` when the session has finished (check
    /// `outcome`) .
    pub fn on_frame(
        &mut self,
        nonce: u32,
        frame: WireFrame,
        encoded_len: usize,
        store: &MessageStore,
        now_s: f64,
    ) -> Option<WireFrame> {
        if self.is_finished() {
            return None;
        }
        self.bytes_received += encoded_len as u64;
        if nonce != self.nonce {
            return self.fail(FailReason::ProtocolViolation("nonce mismatch".into()), now_s);
        }
        if matches!(frame, WireFrame::ConfigMismatch) {
            return self.fail(FailReason::ConfigMismatch, now_s);
        }
        match std::mem::replace(&mut self.phase, Phase::Idle) {
            Phase::AwaitHeaderList => match frame {
                WireFrame::HeaderList {
                    headers,
                    config_hash,
                } => self.on_header_list(headers, config_hash, store, now_s),
                other => self.unexpected(other, "HEADER_LIST", now_s),
            },
            Phase::Transfer { awaiting, pending } => match frame {
                WireFrame::Payload {
                    header,
                    priority,
                    found,
                    payload,
                } => self.on_payload(awaiting, pending, header, priority, found, payload, store, now_s),
                other => self.unexpected(other, "PAYLOAD", now_s),
            },
            Phase::Ending => match frame {
                WireFrame::Ack => {
                    self.phase = Phase::Done;
                    self.ended_at = Some(now_s);
                    None
                }
                other => self.unexpected(other, "ACK", now_s),
            },
            Phase::Idle | Phase::Done | Phase::Failed(_) => None,
        }
    }

    /// The awaited reply did not arrive in time.
    pub fn on_timeout(&mut self, now_s: f64) {
        if !self.is_finished() {
            self.fail(FailReason::Timeout, now_s);
        }
    }

    /// The transport died (connection closed or reset).
    pub fn on_disconnect(&mut self, now_s: f64) {
        if !self.is_finished() {
            self.fail(FailReason::Disconnected, now_s);
        }
    }

    fn on_header_list(
        &mut self,
        headers: Vec<MsgHeader>,
        config_hash: u64,
        store: &MessageStore,
        now_s: f64,
    ) -> Option<WireFrame> {
        self.rtt = Some(now_s - self.list_requested_at);
        if config_hash != self.cfg.config_hash() {
            return self.fail(FailReason::ConfigMismatch, now_s);
        }
        let mut seen = std::collections::BTreeSet::new();
        for h in &headers {
            if !seen.insert(h.key()) {
                return self.fail(
                    FailReason::ProtocolViolation(format!("duplicate key {} in header list", h.key())),
                    now_s,
                );
            }
        }
        let local = store.latest_headers();
        let wanted = diff_headers(&local, &headers, &self.cfg, self.self_rid);
        // Worst case a client can ever request: every key except its own.
        let cap = self.cfg.header_list_capacity() - self.cfg.topic_count(self.self_rid);
        assert!(
            wanted.len() <= cap,
            "request list {} exceeds bound {}",
            wanted.len(),
            cap
        );
        self.requested_count = wanted.len();
        let mut pending: VecDeque<MsgHeader> = wanted.into();
        match pending.pop_front() {
            None => {
                self.phase = Phase::Ending;
                Some(WireFrame::CommEnd)
            }
            Some(first) => {
                self.phase = Phase::Transfer {
                    awaiting: first,
                    pending,
                };
                Some(WireFrame::ReqHeader(first))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_payload(
        &mut self,
        awaiting: MsgHeader,
        mut pending: VecDeque<MsgHeader>,
        header: MsgHeader,
        priority: u8,
        found: bool,
        payload: Vec<u8>,
        store: &MessageStore,
        now_s: f64,
    ) -> Option<WireFrame> {
        if header != awaiting {
            return self.fail(
                FailReason::ProtocolViolation(format!(
                    "payload for {header}, expected {awaiting}"
                )),
                now_s,
            );
        }
        if found {
            // Commit before requesting the next message, so an interruption
            // always leaves a clean prefix of the planned request order.
            match store.commit_remote(Message::new(header, priority, payload)) {
                Ok(CommitOutcome::Committed) => self.committed_count += 1,
                Ok(CommitOutcome::Stale) => {}
                Err(CommitError::ConsistencyFault(h)) => {
                    return self.fail(FailReason::ConsistencyFault(h), now_s)
                }
                Err(CommitError::UnknownKey(_)) => {
                    // Unreachable given diff filtering, but fail loudly.
                    return self.fail(
                        FailReason::ProtocolViolation("payload key outside config".into()),
                        now_s,
                    );
                }
            }
        }
        // A not-found marker means the server evicted that version between
        // listing and fetch; skip it and carry on.
        match pending.pop_front() {
            None => {
                self.phase = Phase::Ending;
                Some(WireFrame::CommEnd)
            }
            Some(next) => {
                self.phase = Phase::Transfer {
                    awaiting: next,
                    pending,
                };
                Some(WireFrame::ReqHeader(next))
            }
        }
    }

    fn unexpected(&mut self, got: WireFrame, wanted: &str, now_s: f64) -> Option<WireFrame> {
        self.fail(
            FailReason::ProtocolViolation(format!("got {}, expected {wanted}", got.opcode_name())),
            now_s,
        )
    }

    fn fail(&mut self, reason: FailReason, now_s: f64) -> Option<WireFrame> {
        self.phase = Phase::Failed(reason);
        self.ended_at = Some(now_s);
        None
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Done | Phase::Failed(_))
    }

    pub fn outcome(&self) -> Option<SessionOutcome> {
        match &self.phase {
            Phase::Done => Some(SessionOutcome::Complete),
            Phase::Failed(reason) => Some(reason.outcome()),
            _ => None,
        }
    }

    pub fn fail_reason(&self) -> Option<&FailReason> {
        match &self.phase {
            Phase::Failed(reason) => Some(reason),
            _ => None,
        }
    }

    pub fn requested_count(&self) -> usize {
        self.requested_count
    }

    pub fn committed_count(&self) -> u32 {
        self.committed_count
    }

    pub fn bytes_received(&self) -> u64 {
        self.bytes_received
    }

    pub fn rtt_estimate(&self) -> Option<f64> {
        self.rtt
    }

    pub fn report(&self) -> SessionReport {
        SessionReport {
            peer: self.peer,
            outcome: self.outcome().unwrap_or(SessionOutcome::Interrupted),
            messages_committed: self.committed_count,
            bytes_received: self.bytes_received,
            duration_s: self.ended_at.unwrap_or(self.started_at) - self.started_at,
            rtt_estimate_s: self.rtt,
        }
    }
}

impl std::fmt::Debug for ClientSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClientSession")
            .field("peer", &self.peer)
            .field("phase", &self.phase)
            .field("committed", &self.committed_count)
            .finish()
    }
}
