//! Cross-validation harness, classification metrics and report rendering.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod report;

pub use cv::{cross_validate, cross_validate_probed, run_folds, FoldOutcome, Normalization};
pub use folds::{make_folds, FoldPlan, FoldStrategy};
pub use metrics::{compute_metrics, metrics_from_confusion, ClassScores, Metrics};
pub use report::{emit_comparison, emit_report, parse_comparison, parse_report, Comparison, MetricsReport, ReportFormat, Summary};
