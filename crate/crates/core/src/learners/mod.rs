//! The four classifiers behind one train/predict interface.

pub mod forest;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::argmax;
use crate::error::{Error, Result};
use forest::{Execution, ForestParams, RandomForest};
use mlp::{Mlp, MlpParams};
use svm::{SvmModel, SvmParams};
use tree::{DecisionTree, TreeParams};

pub const MODEL_SCHEMA: &str = "longicog-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Tree,
    Forest,
    Svm,
    Mlp,
}

impl LearnerKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LearnerKind::Tree => "DT",
            LearnerKind::Forest => "RF",
            LearnerKind::Svm => "SVM",
            LearnerKind::Mlp => "NN",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" | "tree" => Ok(LearnerKind::Tree),
            "rf" | "forest" => Ok(LearnerKind::Forest),
            "svm" => Ok(LearnerKind::Svm),
            "nn" | "mlp" => Ok(LearnerKind::Mlp),
            other => Err(Error::Invalid(format!("unknown learner `{other}` (expected dt, rf, svm or nn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub svm: SvmParams,
    pub mlp: MlpParams,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            svm: SvmParams::default(),
            mlp: MlpParams::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tree.min_samples_split", self.tree.min_samples_split),
            ("forest.n_trees", self.forest.n_trees),
            ("forest.tree.min_samples_split", self.forest.tree.min_samples_split),
            ("mlp.epochs", self.mlp.epochs),
            ("mlp.batch_size", self.mlp.batch_size),
            ("mlp.hidden", self.mlp.hidden),
            ("svm.max_iter", self.svm.max_iter),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Invalid(format!("{name} must be positive")));
        }
        if !(self.svm.c > 0.0 && self.svm.c.is_finite()) {
            return Err(Error::Invalid(format!("svm.c must be positive, got {}", self.svm.c)));
        }
        if self.svm.tol.is_nan() || self.svm.tol <= 0.0 {
            return Err(Error::Invalid("svm.tol must be positive".into()));
        }
        if let svm::Gamma::Value(g) = self.svm.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Invalid(format!("svm gamma must be positive, got {g}")));
            }
        }
        if !(self.mlp.learning_rate > 0.0 && self.mlp.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!(
                "mlp.learning_rate must be positive, got {}",
                self.mlp.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Tree(DecisionTree),
    Forest(RandomForest),
    Svm(SvmModel),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub scores: Vec<f64>,
}

fn check_training_set(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("training needs at least two samples".into()));
    }
    if n_classes < 2 {
        return Err(Error::Invalid("training needs at least two classes".into()));
    }
    let dim = x[0].len();
    if dim == 0 {
        return Err(Error::Invalid("training rows are empty".into()));
    }
    for row in x {
        if row.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features".into()));
        }
    }
    if let Some(&bad) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Invalid(format!("label {bad} outside {n_classes} classes")));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleClass(y[0]));
    }
    Ok(())
}

/// Trains the configured learner. Deterministic in `(config, x, y)`.
pub fn train(config: &LearnerConfig, x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Result<TrainedModel> {
    config.validate()?;
    check_training_set(x, y, n_classes)?;
    Ok(match config.kind {
        LearnerKind::Tree => TrainedModel::Tree(DecisionTree::fit(x, y, n_classes, &config.tree)),
        LearnerKind::Forest => {
            TrainedModel::Forest(RandomForest::fit(x, y, n_classes, &config.forest, config.seed, Execution::Parallel))
        }
        LearnerKind::Svm => TrainedModel::Svm(SvmModel::fit(x, y, n_classes, &config.svm)?),
        LearnerKind::Mlp => TrainedModel::Mlp(mlp::train_mlp(x, y, n_classes, &config.mlp, config.seed).0),
    })
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            TrainedModel::Tree(_) => LearnerKind::Tree,
            TrainedModel::Forest(_) => LearnerKind::Forest,
            TrainedModel::Svm(_) => LearnerKind::Svm,
            TrainedModel::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Tree(m) => m.n_features,
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Svm(m) => m.n_features,
            TrainedModel::Mlp(m) => m.n_inputs,
        }
    }

    /// Class scores (leaf distribution, vote fractions, one-vs-rest decision
    /// values or softmax outputs) and their argmax.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        let scores = match self {
            TrainedModel::Tree(m) => m.leaf(x).to_vec(),
            TrainedModel::Forest(m) => m.vote_fractions(x),
            TrainedModel::Svm(m) => m.decision_values(x),
            TrainedModel::Mlp(m) => m.probabilities(x),
        };
        Ok(Prediction { class: argmax(&scores), scores })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub schema: String,
    pub config: LearnerConfig,
    pub model: TrainedModel,
}

pub fn model_to_json(config: &LearnerConfig, model: &TrainedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelDocument {
        schema: MODEL_SCHEMA.into(),
        config: config.clone(),
        model: model.clone(),
    })?)
}

pub fn model_from_json(text: &str) -> Result<ModelDocument> {
    let doc: ModelDocument = serde_json::from_str(text)?;
    if doc.schema != MODEL_SCHEMA {
        return Err(Error::Schema(doc.schema));
    }
    Ok(doc)
}

pub fn save_model(path: impl AsRef<Path>, config: &LearnerConfig, model: &TrainedModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(config, model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
