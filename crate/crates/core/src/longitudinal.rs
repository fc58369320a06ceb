//! State-detection and change-prediction datasets built from pooled sessions.
//!
//! State detection labels session `j` of a participant either from that
//! session alone (baseline) or from an aggregate of sessions `1..=j`
//! (historical). Change prediction labels every ordered pair of distinct
//! sessions of one participant with the transition between their states.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{ChangeLabel, CognitiveState, CohortStore};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{fuse_all, mean_vector, pool_session};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    Baseline,
    Historical,
}

/// How sessions `1..=j` are collapsed into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryScheme {
    #[default]
    Mean,
    /// Weights proportional to `decay^(j - x)`, normalized to sum to one.
    Ewma(f64),
}

impl fmt::Display for StateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateMode::Baseline => "baseline",
            StateMode::Historical => "historical",
        })
    }
}

impl FromStr for StateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(StateMode::Baseline),
            "historical" => Ok(StateMode::Historical),
            other => Err(Error::Invalid(format!("unknown mode `{other}` (expected baseline or historical)"))),
        }
    }
}

impl fmt::Display for HistoryScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryScheme::Mean => f.write_str("mean"),
            HistoryScheme::Ewma(decay) => write!(f, "ewma:{decay}"),
        }
    }
}

/// `mean` or `ewma:<decay>` with decay in (0, 1].
impl FromStr for HistoryScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mean" {
            return Ok(HistoryScheme::Mean);
        }
        let decay = s
            .strip_prefix("ewma:")
            .and_then(|d| d.parse::<f64>().ok())
            .ok_or_else(|| Error::Invalid(format!("unknown history scheme `{s}` (expected mean or ewma:<decay>)")))?;
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::Invalid(format!("ewma decay must lie in (0, 1], got {decay}")));
        }
        Ok(HistoryScheme::Ewma(decay))
    }
}

impl fmt::Display for PairScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairScheme::Concat => "concat",
            PairScheme::ConcatDiff => "concat+diff",
        })
    }
}

impl FromStr for PairScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(PairScheme::Concat),
            "concat+diff" | "concat-diff" => Ok(PairScheme::ConcatDiff),
            other => Err(Error::Invalid(format!("unknown pair scheme `{other}` (expected concat or concat+diff)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairScheme {
    /// `[a_x, a_y]`
    #[default]
    Concat,
    /// `[a_x, a_y, a_y - a_x]`
    ConcatDiff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSample {
    pub participant: String,
    pub session: u8,
    pub mode: StateMode,
    pub label: CognitiveState,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSample {
    pub participant: String,
    pub from: u8,
    pub to: u8,
    /// `|to - from|` in session steps; metadata only.
    pub gap: u8,
    pub label: ChangeLabel,
    pub features: Vec<f64>,
}

/// Aggregates the session vectors of sessions `1..=j`, given oldest first.
pub fn history_pool(sessions: &[&[f64]], scheme: HistoryScheme) -> Result<Vec<f64>> {
    if sessions.is_empty() {
        return Err(Error::Empty("history has no sessions"));
    }
    match scheme {
        HistoryScheme::Mean => mean_vector(sessions.iter().copied()),
        HistoryScheme::Ewma(decay) => {
            if !(0.0..=1.0).contains(&decay) {
                return Err(Error::Invalid(format!("ewma decay {decay} outside [0, 1]")));
            }
            let dim = sessions[0].len();
            let last = sessions.len() - 1;
            let mut out = vec![0.0; dim];
            let mut total = 0.0;
            for (x, v) in sessions.iter().enumerate() {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
                }
                let w = decay.powi((last - x) as i32);
                total += w;
                for (o, a) in out.iter_mut().zip(v.iter()) {
                    *o += w * a;
                }
            }
            out.iter_mut().for_each(|o| *o /= total);
            Ok(out)
        }
    }
}

/// improved: MCI → HC, decline: HC → MCI, no change otherwise.
pub fn change_label(from: CognitiveState, to: CognitiveState) -> ChangeLabel {
    match (from, to) {
        (CognitiveState::Mci, CognitiveState::Hc) => ChangeLabel::Improved,
        (CognitiveState::Hc, CognitiveState::Mci) => ChangeLabel::Decline,
        _ => ChangeLabel::NoChange,
    }
}

/// Every ordered pair of distinct indices, lexicographic.
pub fn enumerate_pairs(indices: &[u8]) -> Vec<(u8, u8)> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len() * sorted.len().saturating_sub(1));
    for &x in &sorted {
        for &y in &sorted {
            if x != y {
                out.push((x, y));
            }
        }
    }
    out
}

pub fn pair_features(from: &[f64], to: &[f64], scheme: PairScheme) -> Result<Vec<f64>> {
    if from.len() != to.len() {
        return Err(Error::DimensionMismatch { expected: from.len(), actual: to.len() });
    }
    let mut out = Vec::with_capacity(from.len() * 3);
    out.extend_from_slice(from);
    out.extend_from_slice(to);
    if scheme == PairScheme::ConcatDiff {
        out.extend(to.iter().zip(from).map(|(b, a)| b - a));
    }
    Ok(out)
}

/// Pooled, fused vectors of one participant's sessions in temporal order.
struct Timeline<'a> {
    participant: &'a str,
    sessions: Vec<(u8, CognitiveState, Vec<f64>)>,
}

fn timelines<'a>(store: &'a CohortStore, modalities: &[String]) -> Result<Vec<Timeline<'a>>> {
    if modalities.is_empty() {
        return Err(Error::Empty("no modality selected"));
    }
    let specs = modalities
        .iter()
        .map(|name| store.modality(name).ok_or_else(|| Error::UnknownModality(name.clone())))
        .collect::<Result<Vec<_>>>()?;

    store
        .participant_ids()
        .into_par_iter()
        .map(|pid| {
            let sessions = store
                .sessions_of(pid)
                .into_iter()
                .map(|s| {
                    let pooled = specs
                        .iter()
                        .map(|m| pool_session(s, m).map(|f| f.vector))
                        .collect::<Result<Vec<_>>>()?;
                    let fused = fuse_all(pooled.iter().map(Vec::as_slice))?;
                    Ok((s.session_index, s.state, fused))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Timeline { participant: pid, sessions })
        })
        .collect()
}

/// One sample per (participant, session), ordered by participant then session.
pub fn build_state_dataset(
    store: &CohortStore,
    mode: StateMode,
    modalities: &[String],
    history: HistoryScheme,
) -> Result<Vec<StateSample>> {
    let lines = timelines(store, modalities)?;
    let mut out = Vec::new();
    for line in &lines {
        for (j, (index, state, vector)) in line.sessions.iter().enumerate() {
            let features = match mode {
                StateMode::Baseline => vector.clone(),
                StateMode::Historical => {
                    let upto: Vec<&[f64]> = line.sessions[..=j].iter().map(|(_, _, v)| v.as_slice()).collect();
                    history_pool(&upto, history)?
                }
            };
            out.push(StateSample {
                participant: line.participant.to_string(),
                session: *index,
                mode,
                label: *state,
                features,
            });
        }
    }
    Ok(out)
}

/// One sample per participant per ordered pair of distinct sessions.
pub fn build_change_dataset(store: &CohortStore, modalities: &[String], scheme: PairScheme) -> Result<Vec<ChangeSample>> {
    let lines = timelines(store, modalities)?;
    let mut out = Vec::new();
    for line in &lines {
        let by_index: BTreeMap<u8, (CognitiveState, &Vec<f64>)> =
            line.sessions.iter().map(|(i, s, v)| (*i, (*s, v))).collect();
        let indices: Vec<u8> = by_index.keys().copied().collect();
        for (x, y) in enumerate_pairs(&indices) {
            let (sx, ax) = by_index[&x];
            let (sy, ay) = by_index[&y];
            out.push(ChangeSample {
                participant: line.participant.to_string(),
                from: x,
                to: y,
                gap: x.abs_diff(y),
                label: change_label(sx, sy),
                features: pair_features(ax, ay, scheme)?,
            });
        }
    }
    Ok(out)
}

pub fn state_dataset(samples: &[StateSample]) -> Dataset {
    Dataset {
        features: samples.iter().map(|s| s.features.clone()).collect(),
        labels: samples.iter().map(|s| s.label.index()).collect(),
        groups: samples.iter().map(|s| s.participant.clone()).collect(),
        class_names: CognitiveState::ALL.iter().map(|c| c.name().to_string()).collect(),
    }
}

pub fn change_dataset(samples: &[ChangeSample]) -> Dataset {
    Dataset {
        features: samples.iter().map(|s| s.features.clone()).collect(),
        labels: samples.iter().map(|s| s.label.index()).collect(),
        groups: samples.iter().map(|s| s.participant.clone()).collect(),
        class_names: ChangeLabel::ALL.iter().map(|c| c.name().to_string()).collect(),
    }
}

/// Writes samples as JSON Lines, one sample per line.
pub fn export_jsonl<T: Serialize>(path: impl AsRef<Path>, samples: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
