//! Wire frame layout.
//!
//! Every frame is `opcode(1) ++ nonce(4, big-endian) ++ body_len(4,
//! big-endian) ++ body`. The nonce is chosen by the client at session start
//! and echoed by the server for the rest of the exchange.
//!
//! Bodies:
//! - `REQ_HEADER_LIST`: config_hash(8)
//! - `HEADER_LIST`: count(2) ++ count x 6-byte headers ++ config_hash(8)
//! - `REQ_HEADER`: one 6-byte header
//! - `PAYLOAD`: 6-byte header ++ priority(1) ++ found(1) ++ payload bytes
//! - `COMM_END`, `ACK`, `CONFIG_MISMATCH`: empty

use mocha_core::{HeaderDecodeError, MsgHeader, HEADER_LEN};
use thiserror::Error;

pub const OP_REQ_HEADER_LIST: u8 = 0x01;
pub const OP_HEADER_LIST: u8 = 0x02;
pub const OP_REQ_HEADER: u8 = 0x03;
pub const OP_PAYLOAD: u8 = 0x04;
pub const OP_COMM_END: u8 = 0x05;
pub const OP_ACK: u8 = 0x06;
pub const OP_CONFIG_MISMATCH: u8 = 0x07;

/// Fixed part of every frame: opcode, nonce, body length.
pub const FRAME_PREFIX_LEN: usize = 9;

/// Upper bound accepted for a frame body; anything larger is rejected before
/// allocation.
pub const MAX_BODY_LEN: usize = 16 * 1024 * 1024;

pub const FOUND_MARKER: u8 = 0x01;
pub const NOT_FOUND_MARKER: u8 = 0x00;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireFrame {
    ReqHeaderList {
        config_hash: u64,
    },
    HeaderList {
        headers: Vec<MsgHeader>,
        config_hash: u64,
    },
    ReqHeader(MsgHeader),
    Payload {
        header: MsgHeader,
        priority: u8,
        found: bool,
        payload: Vec<u8>,
    },
    CommEnd,
    Ack,
    ConfigMismatch,
}

impl WireFrame {
    pub fn opcode(&self) -> u8 {
        match self {
            WireFrame::ReqHeaderList { .. } => OP_REQ_HEADER_LIST,
            WireFrame::HeaderList { .. } => OP_HEADER_LIST,
            WireFrame::ReqHeader(_) => OP_REQ_HEADER,
            WireFrame::Payload { .. } => OP_PAYLOAD,
            WireFrame::CommEnd => OP_COMM_END,
            WireFrame::Ack => OP_ACK,
            WireFrame::ConfigMismatch => OP_CONFIG_MISMATCH,
        }
    }

    pub fn opcode_name(&self) -> &'static str {
        match self {
            WireFrame::ReqHeaderList { .. } => "REQ_HEADER_LIST",
            WireFrame::HeaderList { .. } => "HEADER_LIST",
            WireFrame::ReqHeader(_) => "REQ_HEADER",
            WireFrame::Payload { .. } => "PAYLOAD",
            WireFrame::CommEnd => "COMM_END",
            WireFrame::Ack => "ACK",
            WireFrame::ConfigMismatch => "CONFIG_MISMATCH",
        }
    }

    /// Encoded size without building the byte vector.
    pub fn encoded_len(&self) -> usize {
        FRAME_PREFIX_LEN + self.body_len()
    }

    fn body_len(&self) -> usize {
        match self {
            WireFrame::ReqHeaderList { .. } => 8,
            WireFrame::HeaderList { headers, .. } => 2 + headers.len() * HEADER_LEN + 8,
            WireFrame::ReqHeader(_) => HEADER_LEN,
            WireFrame::Payload { payload, .. } => HEADER_LEN + 2 + payload.len(),
            WireFrame::CommEnd | WireFrame::Ack | WireFrame::ConfigMismatch => 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame shorter than the {FRAME_PREFIX_LEN}-byte prefix")]
    Truncated,
    #[error("unknown opcode 0x{0:02x}")]
    BadOpcode(u8),
    #[error("body length {got} does not match declared {declared}")]
    LengthMismatch { declared: usize, got: usize },
    #[error("frame body exceeds {MAX_BODY_LEN} bytes: {0}")]
    TooLarge(usize),
    #[error("malformed {opcode} body: {reason}")]
    BadBody {
        opcode: &'static str,
        reason: String,
    },
    #[error("invalid header in frame: {0}")]
    BadHeader(#[from] HeaderDecodeError),
}

pub fn encode_frame(nonce: u32, frame: &WireFrame) -> Vec<u8> {
    let body_len = frame.body_len();
    let mut out = Vec::with_capacity(FRAME_PREFIX_LEN + body_len);
    out.push(frame.opcode());
    out.extend_from_slice(&nonce.to_be_bytes());
    out.extend_from_slice(&(body_len as u32).to_be_bytes());
    match frame {
        WireFrame::ReqHeaderList { config_hash } => {
            out.extend_from_slice(&config_hash.to_be_bytes());
        }
        WireFrame::HeaderList {
            headers,
            config_hash,
        } => {
            out.extend_from_slice(&(headers.len() as u16).to_be_bytes());
            for h in headers {
                out.extend_from_slice(&h.encode());
            }
            out.extend_from_slice(&config_hash.to_be_bytes());
        }
        WireFrame::ReqHeader(h) => out.extend_from_slice(&h.encode()),
        WireFrame::Payload {
            header,
            priority,
            found,
            payload,
        } => {
            out.extend_from_slice(&header.encode());
            out.push(*priority);
            out.push(if *found { FOUND_MARKER } else { NOT_FOUND_MARKER });
            out.extend_from_slice(payload);
        }
        WireFrame::CommEnd | WireFrame::Ack | WireFrame::ConfigMismatch => {}
    }
    debug_assert_eq!(out.len(), FRAME_PREFIX_LEN + body_len);
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<(u32, WireFrame), FrameError> {
    if bytes.len() < FRAME_PREFIX_LEN {
        return Err(FrameError::Truncated);
    }
    let opcode = bytes[0];
    let nonce = u32::from_be_bytes(bytes[1..5].try_into().unwrap());
    let declared = u32::from_be_bytes(bytes[5..9].try_into().unwrap()) as usize;
    if declared > MAX_BODY_LEN {
        return Err(FrameError::TooLarge(declared));
    }
    let body = &bytes[FRAME_PREFIX_LEN..];
    if body.len() != declared {
        return Err(FrameError::LengthMismatch {
            declared,
            got: body.len(),
        });
    }
    let frame = decode_body(opcode, body)?;
    Ok((nonce, frame))
}

fn decode_body(opcode: u8, body: &[u8]) -> Result<WireFrame, FrameError> {
    match opcode {
        OP_REQ_HEADER_LIST => {
            if body.len() != 8 {
                return Err(FrameError::BadBody {
                    opcode: "REQ_HEADER_LIST",
                    reason: format!("expected 8-byte config hash, got {}", body.len()),
                });
            }
            Ok(WireFrame::ReqHeaderList {
                config_hash: u64::from_be_bytes(body.try_into().unwrap()),
            })
        }
        OP_HEADER_LIST => {
            if body.len() < 2 + 8 {
                return Err(FrameError::BadBody {
                    opcode: "HEADER_LIST",
                    reason: "body shorter than count and config hash".into(),
                });
            }
            let count = u16::from_be_bytes(body[..2].try_into().unwrap()) as usize;
            let expected = 2 + count * HEADER_LEN + 8;
            if body.len() != expected {
                return Err(FrameError::BadBody {
                    opcode: "HEADER_LIST",
                    reason: format!("{count} headers require {expected} bytes, got {}", body.len()),
                });
            }
            let mut headers = Vec::with_capacity(count);
            for i in 0..count {
                let at = 2 + i * HEADER_LEN;
                headers.push(MsgHeader::decode(&body[at..at + HEADER_LEN])?);
            }
            let config_hash = u64::from_be_bytes(body[body.len() - 8..].try_into().unwrap());
            Ok(WireFrame::HeaderList {
                headers,
                config_hash,
            })
        }
        OP_REQ_HEADER => {
            if body.len() != HEADER_LEN {
                return Err(FrameError::BadBody {
                    opcode: "REQ_HEADER",
                    reason: format!("expected one {HEADER_LEN}-byte header, got {}", body.len()),
                });
            }
            Ok(WireFrame::ReqHeader(MsgHeader::decode(body)?))
        }
        OP_PAYLOAD => {
            if body.len() < HEADER_LEN + 2 {
                return Err(FrameError::BadBody {
                    opcode: "PAYLOAD",
                    reason: "body shorter than header, priority, and found marker".into(),
                });
            }
            let header = MsgHeader::decode(&body[..HEADER_LEN])?;
            let priority = body[HEADER_LEN];
            let found = match body[HEADER_LEN + 1] {
                FOUND_MARKER => true,
                NOT_FOUND_MARKER => false,
                other => {
                    return Err(FrameError::BadBody {
                        opcode: "PAYLOAD",
                        reason: format!("invalid found marker 0x{other:02x}"),
                    })
                }
            };
            Ok(WireFrame::Payload {
                header,
                priority,
                found,
                payload: body[HEADER_LEN + 2..].to_vec(),
            })
        }
        OP_COMM_END | OP_ACK | OP_CONFIG_MISMATCH => {
            if !body.is_empty() {
                return Err(FrameError::BadBody {
                    opcode: "COMM_END/ACK/CONFIG_MISMATCH",
                    reason: format!("expected empty body, got {} bytes", body.len()),
                });
            }
            Ok(match opcode {
                OP_COMM_END => WireFrame::CommEnd,
                OP_ACK => WireFrame::Ack,
                _ => WireFrame::ConfigMismatch,
            })
        }
        other => Err(FrameError::BadOpcode(other)),
    }
}
