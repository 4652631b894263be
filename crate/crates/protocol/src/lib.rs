//! Synchronization protocol engine.
//!
//! Both roles of the pairwise exchange as transport-agnostic state machines:
//! the client requests the server's header list, diffs it against local
//! state, pulls missing payloads one at a time (committing each before the
//! next request), then closes with COMM_END/ACK. Everything here consumes and
//! produces decoded wire frames; sockets, channels, and clocks belong to the
//! caller.
//!
//! The exchange is bounded by construction: a header list carries at most one
//! header per (robot, topic) key, so a client with `r` own topics never
//! requests more than `S_h - r` messages, where `S_h` is the team-wide key
//! count.

pub mod client;
pub mod diff;
pub mod report;
pub mod server;
pub mod session;
pub mod wire;

pub use client::ClientSession;
pub use diff::diff_headers;
pub use report::{FailReason, SessionOutcome, SessionReport};
pub use server::ServerSession;
pub use session::{run_session, CutAfter, LinkAction, PerfectLink, SessionLink};
pub use wire::{decode_frame, encode_frame, FrameError, WireFrame, FRAME_PREFIX_LEN, MAX_BODY_LEN};
