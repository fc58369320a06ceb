use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::{compute_metrics, metrics_from_confusion, pool_confusions, Metrics};
use super::report::{fingerprint, MetricsReport, Summary, REPORT_SCHEMA};
use crate::dataset::Dataset;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::MinMaxScaler;
use crate::learners::{train, LearnerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Scaler fitted on each fold's training rows only.
    PerFold,
    /// Scaler fitted once on every row.
    Global,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::PerFold => "per-fold",
            Normalization::Global => "global",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-fold" | "per_fold" | "fold" => Ok(Normalization::PerFold),
            "global" => Ok(Normalization::Global),
            other => Err(Error::Invalid(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Observer told about every row the scaler reads: `(fold, sample index)`.
pub type ScalerProbe<'a> = &'a (dyn Fn(usize, usize) + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub test_indices: Vec<usize>,
    pub predictions: Vec<usize>,
    pub metrics: Metrics,
}

pub fn cross_validate(dataset: &Dataset, config: &LearnerConfig, plan: &FoldPlan, normalization: Normalization) -> Result<MetricsReport> {
    cross_validate_probed(dataset, config, plan, normalization, &|_, _| {})
}

/// [`cross_validate`] with an observer on scaler reads, for leakage checks.
pub fn cross_validate_probed(
    dataset: &Dataset,
    config: &LearnerConfig,
    plan: &FoldPlan,
    normalization: Normalization,
    probe: ScalerProbe<'_>,
) -> Result<MetricsReport> {
    let outcomes = run_folds(dataset, config, plan, normalization, probe)?;
    let n_classes = dataset.n_classes();
    let folds: Vec<Metrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let pooled = metrics_from_confusion(pool_confusions(folds.iter().map(|m| &m.confusion), n_classes));
    let k = folds.len() as f64;
    let fold_mean = Summary {
        accuracy: folds.iter().map(|m| m.accuracy).sum::<f64>() / k,
        precision: folds.iter().map(|m| m.precision).sum::<f64>() / k,
        recall: folds.iter().map(|m| m.recall).sum::<f64>() / k,
        f1: folds.iter().map(|m| m.f1).sum::<f64>() / k,
    };

    #[derive(Serialize)]
    struct Fingerprinted<'a> {
        learner: &'a LearnerConfig,
        k: usize,
        strategy: String,
        fold_seed: u64,
        normalization: Normalization,
        n_samples: usize,
        dimension: usize,
    }
    let config_fingerprint = fingerprint(&Fingerprinted {
        learner: config,
        k: plan.k,
        strategy: plan.strategy.to_string(),
        fold_seed: plan.seed,
        normalization,
        n_samples: dataset.len(),
        dimension: dataset.dimension(),
    })?;

    Ok(MetricsReport {
        schema: REPORT_SCHEMA.into(),
        averaging: "macro".into(),
        classes: dataset.class_names.clone(),
        config_fingerprint,
        context: Default::default(),
        pooled,
        fold_mean,
        folds,
    })
}

/// Trains and scores every fold; results are ordered by fold id.
pub fn run_folds(
    dataset: &Dataset,
    config: &LearnerConfig,
    plan: &FoldPlan,
    normalization: Normalization,
    probe: ScalerProbe<'_>,
) -> Result<Vec<FoldOutcome>> {
    dataset.check()?;
    config.validate()?;
    if plan.len() != dataset.len() {
        return Err(Error::Invalid(format!(
            "fold plan covers {} samples, dataset has {}",
            plan.len(),
            dataset.len()
        )));
    }

    let global = match normalization {
        Normalization::Global => Some(MinMaxScaler::fit(dataset.features.iter().enumerate().map(|(i, row)| {
            probe(usize::MAX, i);
            row.as_slice()
        }))?),
        Normalization::PerFold => None,
    };

    (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            run_fold(dataset, config, plan, fold, global.as_ref(), probe).map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect()
}

fn run_fold(
    dataset: &Dataset,
    config: &LearnerConfig,
    plan: &FoldPlan,
    fold: usize,
    global: Option<&MinMaxScaler>,
    probe: ScalerProbe<'_>,
) -> Result<FoldOutcome> {
    let train_idx = plan.train_indices(fold);
    let test_idx = plan.test_indices(fold);
    if test_idx.is_empty() || train_idx.is_empty() {
        return Err(Error::Invalid("empty fold".into()));
    }

    let fitted;
    let scaler = match global {
        Some(s) => s,
        None => {
            fitted = MinMaxScaler::fit(train_idx.iter().map(|&i| {
                probe(fold, i);
                dataset.features[i].as_slice()
            }))?;
            &fitted
        }
    };
    let scale = |idx: &[usize]| -> Result<Vec<Vec<f64>>> {
        idx.iter().map(|&i| scaler.apply(&dataset.features[i])).collect()
    };
    let x_train = scale(&train_idx)?;
    let y_train: Vec<usize> = train_idx.iter().map(|&i| dataset.labels[i]).collect();
    let x_test = scale(&test_idx)?;
    let y_test: Vec<usize> = test_idx.iter().map(|&i| dataset.labels[i]).collect();

    let fold_config = config.clone().with_seed(derive_seed(config.seed, fold as u64));
    let model = train(&fold_config, &x_train, &y_train, dataset.n_classes())?;
    let predictions = x_test
        .iter()
        .map(|row| model.predict(row).map(|p| p.class))
        .collect::<Result<Vec<_>>>()?;
    let metrics = compute_metrics(&predictions, &y_test, dataset.n_classes())?;
    Ok(FoldOutcome {
        fold,
        test_indices: test_idx,
        predictions,
        metrics,
    })
}
