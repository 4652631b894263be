//! Payload codecs.
//!
//! Payloads are compressed once, at local insert time, and then carried
//! verbatim across any number of hops. The codec is pluggable so tests can
//! keep payloads byte-inspectable while deployments compress.

use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload decompression failed: {0}")]
    Corrupt(String),
}

pub trait PayloadCodec: Send + Sync {
    fn name(&self) -> &'static str;
    fn compress(&self, raw: &[u8]) -> Vec<u8>;
    fn decompress(&self, stored: &[u8]) -> Result<Vec<u8>, CodecError>;
}

/// Pass-through codec; the stored payload equals the raw payload.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityCodec;

impl PayloadCodec for IdentityCodec {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn compress(&self, raw: &[u8]) -> Vec<u8> {
        raw.to_vec()
    }

    fn decompress(&self, stored: &[u8]) -> Result<Vec<u8>, CodecError> {
        Ok(stored.to_vec())
    }
}

/// LZ4 block compression with the uncompressed size prepended.
#[derive(Debug, Default, Clone, Copy)]
pub struct Lz4Codec;

impl PayloadCodec for Lz4Codec {
    fn name(&self) -> &'static str {
        "lz4"
    }

    fn compress(&self, raw: &[u8]) -> Vec<u8> {
        lz4_flex::compress_prepend_size(raw)
    }

    fn decompress(&self, stored: &[u8]) -> Result<Vec<u8>, CodecError> {
        lz4_flex::decompress_size_prepended(stored).map_err(|e| CodecError::Corrupt(e.to_string()))
    }
}

pub fn identity() -> Arc<dyn PayloadCodec> {
    Arc::new(IdentityCodec)
}

pub fn lz4() -> Arc<dyn PayloadCodec> {
    Arc::new(Lz4Codec)
}
