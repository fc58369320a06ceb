//! End-to-end runs: cohort → dataset → folds → cross-validated report.

use serde::{Deserialize, Serialize};

use crate::cohort::CohortStore;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, make_folds, Comparison, FoldStrategy, MetricsReport, Normalization};
use crate::learners::LearnerConfig;
use crate::longitudinal::{
    build_change_dataset, build_state_dataset, change_dataset, state_dataset, HistoryScheme, PairScheme, StateMode,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub modalities: Vec<String>,
    pub learner: LearnerConfig,
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub normalization: Normalization,
    pub seed: u64,
}

impl Protocol {
    pub fn new(modalities: Vec<String>, learner: LearnerConfig) -> Self {
        Self {
            modalities,
            learner,
            folds: 10,
            strategy: FoldStrategy::Stratified,
            normalization: Normalization::PerFold,
            seed: 42,
        }
    }

    /// Uses every modality declared by the cohort when none was chosen.
    fn modalities_for(&self, store: &CohortStore) -> Result<Vec<String>> {
        if !self.modalities.is_empty() {
            return Ok(self.modalities.clone());
        }
        if store.modalities.is_empty() {
            return Err(Error::Empty("cohort declares no modality"));
        }
        Ok(store.modalities.iter().map(|m| m.name.clone()).collect())
    }

    fn evaluate(&self, dataset: &Dataset, modalities: &[String]) -> Result<MetricsReport> {
        let plan = make_folds(&dataset.labels, &dataset.groups, self.folds, self.strategy, self.seed)?;
        let learner = self.learner.clone().with_seed(self.seed);
        let mut report = cross_validate(dataset, &learner, &plan, self.normalization)?;
        let ctx = &mut report.context;
        ctx.insert("learner".into(), learner.kind.short_name().into());
        ctx.insert("modalities".into(), modalities.join("+"));
        ctx.insert("folds".into(), format!("{} ({})", self.folds, self.strategy));
        ctx.insert("normalization".into(), self.normalization.to_string());
        ctx.insert("seed".into(), self.seed.to_string());
        ctx.insert("samples".into(), dataset.len().to_string());
        Ok(report)
    }
}

pub fn detect(store: &CohortStore, protocol: &Protocol, mode: StateMode, history: HistoryScheme) -> Result<MetricsReport> {
    let modalities = protocol.modalities_for(store)?;
    let samples = build_state_dataset(store, mode, &modalities, history)?;
    let mut report = protocol.evaluate(&state_dataset(&samples), &modalities)?;
    let method = match mode {
        StateMode::Baseline => "State detection (baseline)".to_string(),
        StateMode::Historical => format!("State detection (historical, {history})"),
    };
    report.context.insert("method".into(), method);
    Ok(report)
}

pub fn predict_change(store: &CohortStore, protocol: &Protocol, pairs: PairScheme) -> Result<MetricsReport> {
    let modalities = protocol.modalities_for(store)?;
    let samples = build_change_dataset(store, &modalities, pairs)?;
    let mut report = protocol.evaluate(&change_dataset(&samples), &modalities)?;
    report.context.insert("method".into(), format!("Change prediction ({pairs})"));
    Ok(report)
}

/// Baseline and historical detection under the same protocol.
pub fn compare(store: &CohortStore, protocol: &Protocol, history: HistoryScheme) -> Result<Comparison> {
    let baseline = detect(store, protocol, StateMode::Baseline, HistoryScheme::Mean)?;
    let proposed = detect(store, protocol, StateMode::Historical, history)?;
    Ok(Comparison::new(baseline, proposed))
}
