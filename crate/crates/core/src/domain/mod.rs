//! Shared vocabulary: identifiers, task labels, provider results and the
//! fusion document model with its canonical JSON schema.

mod document;
mod ids;
mod result;
mod schema;
mod task;
mod validate;

pub use document::{
    unit_id, Block, DivergenceReport, FusionDocument, Recommendation, Unit, UnitStatus, Variant,
    OTHER_BLOCK,
};
pub use ids::{DocumentId, InvalidModelId, ModelId, SessionId, TurnId};
pub use result::{summarize, ProviderResult, ResultStatus, SUMMARY_CHARS};
pub use schema::{
    decode_fusion_document, encode_fusion_document, encode_fusion_document_string, DecodeError,
};
pub use task::{LabelMismatch, TaskLabel, TaskMajor, TaskMinor};
pub use validate::{validate_fusion_document, ValidationReport, Violation, ViolationKind};
