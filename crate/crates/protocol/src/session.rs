//! In-memory session driver.
//!
//! Pairs a client and a server engine over a scriptable link, useful for
//! tests, oracles, and any caller that wants a full exchange without real
//! sockets. Frames pass through the link in order; once the link cuts, the
//! awaiting client observes a timeout, mirroring how a stream transport
//! surfaces a dead peer.

use mocha_core::MessageStore;

use crate::client::ClientSession;
use crate::report::SessionReport;
use crate::server::ServerSession;
use crate::wire::{decode_frame, encode_frame};

/// What the link does with one in-flight frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkAction {
    Deliver,
    /// Drop this frame and every later one; the receiver times out.
    Cut,
}

/// Frame-level interposer for `run_session`.
pub trait SessionLink {
    /// `index` counts every frame in flight, both directions, from 0.
    fn transfer(&mut self, client_to_server: bool, index: usize, encoded: &[u8]) -> LinkAction;
}

/// Delivers everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct PerfectLink;

impl SessionLink for PerfectLink {
    fn transfer(&mut self, _c2s: bool, _index: usize, _encoded: &[u8]) -> LinkAction {
        LinkAction::Deliver
    }
}

/// Delivers the first `n` frames, then cuts.
#[derive(Debug, Clone, Copy)]
pub struct CutAfter(pub usize);

impl SessionLink for CutAfter {
    fn transfer(&mut self, _c2s: bool, index: usize, _encoded: &[u8]) -> LinkAction {
        if index < self.0 {
            LinkAction::Deliver
        } else {
            LinkAction::Cut
        }
    }
}

/// Synthetic per-frame clock step used for report durations.
const FRAME_STEP_S: f64 = 0.001;

/// Run one full client/server exchange between two stores.
///
/// The client pulls from the server: on a `Complete` outcome the client
/// store's newest entries form a superset of the server's header-list
/// snapshot, restricted to keys the client does not own itself.
pub fn run_session(
    client_store: &MessageStore,
    server_store: &MessageStore,
    nonce: u32,
    link: &mut dyn SessionLink,
) -> SessionReport {
    let mut client = ClientSession::new(
        client_store.config().clone(),
        client_store.owner(),
        server_store.owner(),
        nonce,
    );
    let mut server = ServerSession::new(server_store.config().clone());

    let mut now = 0.0;
    let mut index = 0;
    let mut outbound = client.start(now);
    loop {
        // Client -> server leg.
        let encoded = encode_frame(nonce, &outbound);
        if link.transfer(true, index, &encoded) == LinkAction::Cut {
            client.on_timeout(now);
            break;
        }
        index += 1;
        now += FRAME_STEP_S;
        let (got_nonce, frame) = decode_frame(&encoded).expect("self-encoded frame");
        let Some(reply) = server.on_frame(got_nonce, frame, server_store) else {
            // Server dropped the session; the client sees silence.
            client.on_timeout(now);
            break;
        };

        // Server -> client leg.
        let encoded = encode_frame(nonce, &reply);
        if link.transfer(false, index, &encoded) == LinkAction::Cut {
            client.on_timeout(now);
            break;
        }
        index += 1;
        now += FRAME_STEP_S;
        let len = encoded.len();
        let (got_nonce, frame) = decode_frame(&encoded).expect("self-encoded frame");
        let next = client.on_frame(got_nonce, frame, len, client_store, now);
        if client.is_finished() {
            break;
        }
        outbound = next.expect("unfinished client must emit a frame");
    }
    client.report()
}
