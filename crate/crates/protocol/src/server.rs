//! Server role of the synchronization exchange.
//!
//! The server answers requests one at a time and keeps no state between them
//! beyond the session nonce: the header list is read fresh from the store,
//! every payload fetch is an independent lookup. A requested header that has
//! aged out of the retention ring between listing and fetch is answered with
//! a not-found marker so the client can skip it and keep the session alive.

use std::sync::Arc;

use mocha_core::{MessageStore, TeamConfig};

use crate::report::FailReason;
use crate::wire::WireFrame;

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Ready,
    Done,
    Failed(FailReason),
}

pub struct ServerSession {
    cfg: Arc<TeamConfig>,
    nonce: Option<u32>,
    phase: Phase,
    config_mismatch: bool,
}

impl ServerSession {
    pub fn new(cfg: Arc<TeamConfig>) -> Self {
        Self {
            cfg,
            nonce: None,
            phase: Phase::Ready,
            config_mismatch: false,
        }
    }

    /// Handle one decoded request frame. Returns the reply to send, or `None`
    /// when the frame is invalid for this session — the caller should then
    /// drop the connection without replying.
    pub fn on_frame(
        &mut self,
        nonce: u32,
        frame: WireFrame,
        store: &MessageStore,
    ) -> Option<WireFrame> {
        if !matches!(self.phase, Phase::Ready) {
            return None;
        }
        match self.nonce {
            None => self.nonce = Some(nonce),
            Some(expected) if expected != nonce => {
                self.phase = Phase::Failed(FailReason::ProtocolViolation(
                    "nonce changed mid-session".into(),
                ));
                return None;
            }
            Some(_) => {}
        }
        match frame {
            WireFrame::ReqHeaderList { config_hash } => {
                if config_hash != self.cfg.config_hash() {
                    self.config_mismatch = true;
                    self.phase = Phase::Done;
                    return Some(WireFrame::ConfigMismatch);
                }
                Some(WireFrame::HeaderList {
                    headers: store.latest_headers(),
                    config_hash: self.cfg.config_hash(),
                })
            }
            WireFrame::ReqHeader(header) => match store.get_payload(&header) {
                Ok(msg) => Some(WireFrame::Payload {
                    header: msg.header,
                    priority: msg.priority,
                    found: true,
                    payload: msg.payload,
                }),
                Err(_) => Some(WireFrame::Payload {
                    header,
                    priority: 0,
                    found: false,
                    payload: Vec::new(),
                }),
            },
            WireFrame::CommEnd => {
                self.phase = Phase::Done;
                Some(WireFrame::Ack)
            }
            other => {
                self.phase = Phase::Failed(FailReason::ProtocolViolation(format!(
                    "client sent {}",
                    other.opcode_name()
                )));
                None
            }
        }
    }

    pub fn is_finished(&self) -> bool {
        !matches!(self.phase, Phase::Ready)
    }

    pub fn config_mismatch(&self) -> bool {
        self.config_mismatch
    }

    pub fn nonce(&self) -> Option<u32> {
        self.nonce
    }
}

impl std::fmt::Debug for ServerSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerSession")
            .field("phase", &self.phase)
            .finish()
    }
}
