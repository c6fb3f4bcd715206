//! Multi-model output fusion.

pub mod align;
pub mod criteria;
pub mod divergence;
pub mod engine;
pub mod enhance;
pub mod integrate;
pub mod llm;
pub mod segment;
pub mod similarity;

pub use align::{align_deterministic, greedy_match, AlignmentEdge, UnitRef};
pub use divergence::{divergence_from_alignment, recommend_view, ViewThresholds};
pub use integrate::{integrate, IntegrateError};
pub use segment::{structure_deterministic, Granularity, SegmentedBlock, SegmentedOutput};
pub use similarity::{similarity, EdgeClass, Thresholds, TrigramVector};
pub use criteria::{CriteriaSet, PromptSet};
pub use engine::{rank_models, EngineConfig, EngineKind, FusionEngine, FusionError, FusionOutcome};
