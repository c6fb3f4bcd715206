//! Canonical JSON encoding of fusion documents.
//!
//! Field order is fixed by the struct declarations and output is compact, so
//! equal documents always encode to identical bytes.

use super::FusionDocument;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid fusion document at offset {offset}: {message}")]
pub struct DecodeError {
    /// Byte offset into the input where parsing stopped.
    pub offset: usize,
    pub message: String,
}

pub fn encode_fusion_document(doc: &FusionDocument) -> Vec<u8> {
    serde_json::to_vec(doc).expect("fusion documents always serialize")
}

pub fn encode_fusion_document_string(doc: &FusionDocument) -> String {
    String::from_utf8(encode_fusion_document(doc)).expect("serde_json emits UTF-8")
}

pub fn decode_fusion_document(bytes: &[u8]) -> Result<FusionDocument, DecodeError> {
    serde_json::from_slice(bytes).map_err(|e| DecodeError {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Converts serde_json's 1-based line and column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line <= 1 {
        return column.min(bytes.len());
    }
    let mut seen = 1;
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'\n' {
            seen += 1;
            if seen == line {
                return (i + 1 + column).min(bytes.len());
            }
        }
    }
    bytes.len()
}
