//! Cognitive-state detection and cognitive-change prediction from
//! longitudinal per-session speech features.
//!
//! The pipeline runs: [`cohort`] (participants, sessions, MoCA-derived
//! labels) → [`features`] (response ingestion, session pooling, scaling,
//! fusion) → [`longitudinal`] (state and change datasets) → [`learners`]
//! (tree, forest, SVM, MLP) → [`evaluation`] (folds, metrics, reports).
//! [`synth`] generates seeded cohorts with a planted class signal.

pub mod cohort;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod longitudinal;
pub mod synth;

pub use cohort::{derive_state, load_cohort, save_cohort, validate_cohort, ChangeLabel, CognitiveState, CohortStore, ModalitySpec};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use learners::{train, LearnerConfig, LearnerKind, TrainedModel};

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn argmax_counts(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Derives an independent seed for unit `stream` (a tree, a fold, ...) from a
/// base seed, so parallel and sequential runs draw identical numbers.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
