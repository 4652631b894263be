//! A stored message: header, transfer priority, and opaque payload bytes.

use crate::header::MsgHeader;

/// The value side of the store. `payload` is the post-compression byte
/// string and is forwarded byte-identical across hops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub header: MsgHeader,
    pub priority: u8,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(header: MsgHeader, priority: u8, payload: Vec<u8>) -> Self {
        Self {
            header,
            priority,
            payload,
        }
    }
}
