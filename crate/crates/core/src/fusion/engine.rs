//! The fusion pipeline: divergence check, structuring, alignment,
//! integration and enhancement.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::align::{align_deterministic, AlignmentEdge};
use super::criteria::{CriteriaSet, PromptSet};
use super::divergence::{divergence_from_alignment, recommend_view, ViewThresholds};
use super::enhance::{accept_enhanced, skipped};
use super::integrate::{integrate, IntegrateError};
use super::llm::{parse_alignment, parse_structure, render_align, render_structure, LlmStage};
use super::segment::{structure_deterministic, Granularity, SegmentedOutput};
use super::similarity::Thresholds;
use crate::domain::{encode_fusion_document_string, DivergenceReport, FusionDocument, ModelId, ProviderResult, Recommendation, TaskLabel};
use crate::gateway::Gateway;
use crate::store::PerformanceTable;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    #[default]
    Deterministic,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub thresholds: Thresholds,
    pub view: ViewThresholds,
    /// Multiplier applied to a model's score when ranking; absent means 1.
    pub weights: BTreeMap<ModelId, f64>,
    pub granularity: Granularity,
    pub structurer: EngineKind,
    pub aligner: EngineKind,
    pub enhancer: EngineKind,
    /// Model that runs the LLM stages.
    pub llm_model: Option<ModelId>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            view: ViewThresholds::default(),
            weights: BTreeMap::new(),
            granularity: Granularity::default(),
            structurer: EngineKind::Deterministic,
            aligner: EngineKind::Deterministic,
            enhancer: EngineKind::Deterministic,
            llm_model: None,
        }
    }
}

impl EngineConfig {
    pub fn check(&self) -> Result<(), String> {
        if !self.thresholds.is_valid() {
            return Err(format!(
                "thresholds must satisfy 0 < align < merge <= 1, got align {} merge {}",
                self.thresholds.align, self.thresholds.merge
            ));
        }
        for (m, w) in &self.weights {
            if !(w.is_finite() && *w > 0.0) {
                return Err(format!("weight for {m} must be positive"));
            }
        }
        let uses_llm = [self.structurer, self.aligner, self.enhancer].contains(&EngineKind::Llm);
        if uses_llm && self.llm_model.is_none() {
            return Err("llm_model is required when a stage uses the llm engine".into());
        }
        Ok(())
    }

    pub fn weight(&self, model: &ModelId) -> f64 {
        self.weights.get(model).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("fusion needs at least 2 complete results, got {0}")]
    TooFewResults(usize),
    #[error("no complete result for model {0}")]
    MissingResult(ModelId),
    #[error("empty content from model {0}")]
    EmptyContent(ModelId),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("invalid engine config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub document: FusionDocument,
    pub divergence: DivergenceReport,
}

/// Ranks models for a major: normalized score times configured weight,
/// descending, ties by id.
pub fn rank_models(table: &PerformanceTable, task: TaskLabel, models: &[ModelId], config: &EngineConfig) -> Vec<ModelId> {
    let scores = table.scores(task.major(), models);
    let mut ranked: Vec<(f64, &ModelId)> = models
        .iter()
        .map(|m| (scores[m].normalized * config.weight(m), m))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    ranked.dedup_by(|a, b| a.1 == b.1);
    ranked.into_iter().map(|(_, m)| m.clone()).collect()
}

pub struct FusionEngine {
    config: EngineConfig,
    taxonomy: Arc<Taxonomy>,
    criteria: Arc<CriteriaSet>,
    prompts: Arc<PromptSet>,
    llm: Option<LlmStage>,
}

impl FusionEngine {
    /// Deterministic engine with bundled criteria and prompts.
    pub fn deterministic(taxonomy: Arc<Taxonomy>) -> Self {
        Self {
            config: EngineConfig::default(),
            taxonomy,
            criteria: Arc::new(CriteriaSet::builtin().clone()),
            prompts: Arc::new(PromptSet::default()),
            llm: None,
        }
    }

    pub fn new(
        config: EngineConfig,
        taxonomy: Arc<Taxonomy>,
        criteria: Arc<CriteriaSet>,
        prompts: Arc<PromptSet>,
        gateway: Option<Arc<Gateway>>,
    ) -> Result<Self, FusionError> {
        config.check().map_err(FusionError::Config)?;
        let llm = match (&config.llm_model, gateway) {
            (Some(model), Some(gateway)) => {
                if !gateway.contains(model) {
                    return Err(FusionError::Config(format!("llm_model {model} is not registered")));
                }
                Some(LlmStage { gateway, model: model.clone() })
            }
            (Some(_), None) => return Err(FusionError::Config("llm stages need a gateway".into())),
            _ => None,
        };
        Ok(Self { config, taxonomy, criteria, prompts, llm })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    fn stage(&self, kind: EngineKind) -> Option<&LlmStage> {
        (kind == EngineKind::Llm).then_some(self.llm.as_ref()).flatten()
    }

    fn selected<'a>(&self, results: &'a [ProviderResult], selection: &[ModelId]) -> Result<Vec<&'a ProviderResult>, FusionError> {
        let mut picked = Vec::new();
        for model in selection {
            if picked.iter().any(|r: &&ProviderResult| &r.model == model) {
                continue;
            }
            let result = results
                .iter()
                .rev()
                .find(|r| &r.model == model && r.is_complete())
                .ok_or_else(|| FusionError::MissingResult(model.clone()))?;
            if result.content.trim().is_empty() {
                return Err(FusionError::EmptyContent(model.clone()));
            }
            picked.push(result);
        }
        if picked.len() < 2 {
            return Err(FusionError::TooFewResults(picked.len()));
        }
        Ok(picked)
    }

    fn structure_all(&self, results: &[&ProviderResult], task: TaskLabel) -> Vec<SegmentedOutput> {
        let template = self.taxonomy.block_template(task.major());
        results
            .iter()
            .map(|r| structure_deterministic(&r.model, &r.content, template, self.config.granularity))
            .collect()
    }

    /// Divergence over the deterministic segmentation and alignment.
    pub fn estimate_divergence(
        &self,
        results: &[ProviderResult],
        task: TaskLabel,
        selection: &[ModelId],
    ) -> Result<DivergenceReport, FusionError> {
        let picked = self.selected(results, selection)?;
        let segmented = self.structure_all(&picked, task);
        let edges = align_deterministic(&segmented, self.config.thresholds);
        Ok(divergence_from_alignment(&segmented, &edges))
    }

    async fn structure_llm(&self, stage: &LlmStage, result: &ProviderResult, task: TaskLabel, fallback: SegmentedOutput) -> SegmentedOutput {
        let template = self.taxonomy.block_template(task.major());
        let prompt = render_structure(&self.prompts, &self.taxonomy, task, &result.content);
        stage
            .ask(prompt, "fusion#structure", |answer| parse_structure(&result.model, answer, &result.content, template))
            .await
            .unwrap_or(fallback)
    }

    async fn align(&self, segmented: &[SegmentedOutput], task: TaskLabel) -> Vec<AlignmentEdge> {
        let thresholds = self.config.thresholds;
        if let Some(stage) = self.stage(self.config.aligner) {
            let prompt = render_align(&self.prompts, &self.taxonomy, &self.criteria, task, segmented, thresholds);
            if let Some(edges) = stage
                .ask(prompt, "fusion#align", |answer| parse_alignment(answer, segmented, thresholds))
                .await
            {
                return edges;
            }
        }
        align_deterministic(segmented, thresholds)
    }

    /// Runs the enhancement stage; the deterministic engine is the identity.
    pub async fn enhance(&self, doc: &FusionDocument) -> FusionDocument {
        let Some(stage) = self.stage(self.config.enhancer) else {
            return doc.clone();
        };
        let prompt = self.prompts.enhance.replace("{document}", &encode_fusion_document_string(doc));
        let last_error = std::sync::Mutex::new(String::from("no answer"));
        let accepted = stage
            .ask(prompt, "fusion#enhance", |answer| match accept_enhanced(doc, answer, &self.taxonomy) {
                Ok(d) => Some(d),
                Err(e) => {
                    *last_error.lock().unwrap() = e;
                    None
                }
            })
            .await;
        accepted.unwrap_or_else(|| skipped(doc, &last_error.into_inner().unwrap()))
    }

    /// Fuses the latest complete results of `selection`, ranked by `rank`.
    pub async fn fuse(
        &self,
        results: &[ProviderResult],
        task: TaskLabel,
        selection: &[ModelId],
        rank: &[ModelId],
    ) -> Result<FusionOutcome, FusionError> {
        let picked = self.selected(results, selection)?;
        let template = self.taxonomy.block_template(task.major());
        let base = self.structure_all(&picked, task);
        let base_edges = align_deterministic(&base, self.config.thresholds);
        let divergence = divergence_from_alignment(&base, &base_edges);
        let (recommendation, reason) = recommend_view(&divergence, task.major(), &self.config.view);

        let models: Vec<ModelId> = picked.iter().map(|r| r.model.clone()).collect();
        if recommendation == Recommendation::Comparison {
            let mut participants = models;
            let pos = super::integrate::rank_positions(&participants, rank);
            participants.sort_by_key(|m| pos[m]);
            let document = FusionDocument { task, recommendation, reason, participants, blocks: Vec::new() };
            return Ok(FusionOutcome { document, divergence });
        }

        let (segmented, edges) = match self.stage(self.config.structurer) {
            Some(stage) => {
                let jobs = picked
                    .iter()
                    .zip(base.iter().cloned())
                    .map(|(r, fallback)| self.structure_llm(stage, r, task, fallback));
                let segmented = futures::future::join_all(jobs).await;
                let edges = self.align(&segmented, task).await;
                (segmented, edges)
            }
            None if self.config.aligner == EngineKind::Llm => {
                let edges = self.align(&base, task).await;
                (base, edges)
            }
            None => (base, base_edges),
        };

        let mut document = integrate(&segmented, &edges, task, template, rank)?;
        document.reason = reason;
        let document = self.enhance(&document).await;
        Ok(FusionOutcome { document, divergence })
    }
}
