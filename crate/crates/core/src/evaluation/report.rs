use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::Metrics;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "longicog-report/1";
pub const COMPARISON_SCHEMA: &str = "longicog-comparison/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Summary {
    pub fn of(m: &Metrics) -> Self {
        Self {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }
}

/// Cross-validation result: pooled confusion across folds plus per-fold scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema: String,
    pub averaging: String,
    pub classes: Vec<String>,
    pub config_fingerprint: String,
    /// Free-form run description (method, learner, features, ...).
    pub context: BTreeMap<String, String>,
    pub pooled: Metrics,
    pub fold_mean: Summary,
    pub folds: Vec<Metrics>,
}

/// Two reports side by side with `proposed − baseline` deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema: String,
    pub baseline: MetricsReport,
    pub proposed: MetricsReport,
    pub delta: Summary,
}

impl Comparison {
    pub fn new(baseline: MetricsReport, proposed: MetricsReport) -> Self {
        let (b, p) = (Summary::of(&baseline.pooled), Summary::of(&proposed.pooled));
        let delta = Summary {
            accuracy: p.accuracy - b.accuracy,
            precision: p.precision - b.precision,
            recall: p.recall - b.recall,
            f1: p.f1 - b.f1,
        };
        Self {
            schema: COMPARISON_SCHEMA.into(),
            baseline,
            proposed,
            delta,
        }
    }
}

/// Hex SHA-256 of the value's JSON encoding.
pub fn fingerprint<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn label(report: &MetricsReport) -> String {
    report.context.get("learner").cloned().unwrap_or_else(|| "model".into())
}

pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Markdown => Ok(report_markdown(report)),
    }
}

fn report_markdown(report: &MetricsReport) -> String {
    let mut out = String::new();
    let title = report.context.get("method").map_or("Cross-validation", String::as_str);
    let _ = writeln!(out, "## {title}\n");
    for (k, v) in &report.context {
        let _ = writeln!(out, "- {k}: {v}");
    }
    let _ = writeln!(out, "- averaging: {} (precision, recall, F1)", report.averaging);
    let _ = writeln!(out, "- config fingerprint: `{}`\n", report.config_fingerprint);

    let s = Summary::of(&report.pooled);
    let _ = writeln!(out, "| Model | Acc. (%) | Prec. (%) | Recall (%) | F1 (%) |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    let cells: Vec<String> = s.values().iter().map(|&v| pct(v)).collect();
    let _ = writeln!(out, "| {} | {} |", label(report), cells.join(" | "));

    let _ = writeln!(out, "\n### Per class\n");
    let _ = writeln!(out, "| Class | Support | Prec. (%) | Recall (%) | F1 (%) |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for (name, c) in report.classes.iter().zip(&report.pooled.per_class) {
        let _ = writeln!(out, "| {name} | {} | {} | {} | {} |", c.support, pct(c.precision), pct(c.recall), pct(c.f1));
    }

    let _ = writeln!(out, "\n### Confusion (rows = true, columns = predicted)\n");
    let _ = writeln!(out, "| | {} |", report.classes.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(report.classes.len()));
    for (name, row) in report.classes.iter().zip(&report.pooled.confusion) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "| {name} | {} |", cells.join(" | "));
    }

    let _ = writeln!(out, "\n### Per fold\n");
    let _ = writeln!(out, "| Fold | n | Acc. (%) | Prec. (%) | Recall (%) | F1 (%) |");
    let _ = writeln!(out, "|---|---|---|---|---|---|");
    for (i, m) in report.folds.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            i + 1,
            m.n,
            pct(m.accuracy),
            pct(m.precision),
            pct(m.recall),
            pct(m.f1)
        );
    }
    let f = report.fold_mean.values();
    let _ = writeln!(
        out,
        "| mean | | {} | {} | {} | {} |",
        pct(f[0]),
        pct(f[1]),
        pct(f[2]),
        pct(f[3])
    );
    out
}

pub fn emit_comparison(cmp: &Comparison, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(cmp)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "## Baseline vs. historical\n");
            let _ = writeln!(out, "- averaging: {} (precision, recall, F1)", cmp.proposed.averaging);
            let _ = writeln!(out, "- baseline fingerprint: `{}`", cmp.baseline.config_fingerprint);
            let _ = writeln!(out, "- proposed fingerprint: `{}`\n", cmp.proposed.config_fingerprint);
            let _ = writeln!(
                out,
                "| Model | Acc. Baseline | Acc. Proposed | Acc. Δ | Prec. Baseline | Prec. Proposed | Prec. Δ | Recall Baseline | Recall Proposed | Recall Δ | F1 Baseline | F1 Proposed | F1 Δ |"
            );
            let _ = writeln!(out, "|---|{}", "---|".repeat(12));
            let b = Summary::of(&cmp.baseline.pooled).values();
            let p = Summary::of(&cmp.proposed.pooled).values();
            let d = cmp.delta.values();
            let cells: Vec<String> = (0..4)
                .flat_map(|i| [pct(b[i]), pct(p[i]), format!("{:+.1}", d[i] * 100.0)])
                .collect();
            let _ = writeln!(out, "| {} | {} |", label(&cmp.proposed), cells.join(" | "));
            Ok(out)
        }
    }
}

pub fn parse_report(json: &str) -> Result<MetricsReport> {
    let report: MetricsReport = serde_json::from_str(json)?;
    if report.schema != REPORT_SCHEMA {
        return Err(Error::Schema(report.schema));
    }
    Ok(report)
}

pub fn parse_comparison(json: &str) -> Result<Comparison> {
    let cmp: Comparison = serde_json::from_str(json)?;
    if cmp.schema != COMPARISON_SCHEMA {
        return Err(Error::Schema(cmp.schema));
    }
    Ok(cmp)
}
