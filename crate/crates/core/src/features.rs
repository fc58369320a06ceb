//! Response-level feature ingestion, session pooling, min-max scaling and
//! modality fusion.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::{CohortStore, ModalitySpec, ResponseFeature, SessionRecord, MAX_SESSION_INDEX, QUESTIONS_PER_SESSION};
use crate::error::{Error, Result};

/// One line of a feature file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub participant: String,
    pub session: u8,
    pub question: u8,
    pub modality: String,
    pub vector: Vec<f64>,
}

/// Parses a JSON Lines feature file. Blank lines are skipped.
pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FeatureRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_feature_file(path: impl AsRef<Path>, records: impl IntoIterator<Item = FeatureRecord>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub records: usize,
    pub sessions_touched: usize,
}

/// Attaches every record in the feature file at `path` to its session.
///
/// All records are checked before any is applied: on error the store is
/// left untouched and the error lists each offending record by line.
pub fn ingest_features(path: impl AsRef<Path>, modality: &ModalitySpec, store: &mut CohortStore) -> Result<IngestSummary> {
    let path = path.as_ref();
    let records = read_feature_file(path)?;
    ingest_records(records, modality, store)
}

pub fn ingest_records(records: Vec<FeatureRecord>, modality: &ModalitySpec, store: &mut CohortStore) -> Result<IngestSummary> {
    match store.modality(&modality.name) {
        Some(declared) if declared.dimension == modality.dimension => {}
        Some(declared) => {
            return Err(Error::DimensionMismatch {
                expected: declared.dimension,
                actual: modality.dimension,
            })
        }
        None => return Err(Error::UnknownModality(modality.name.clone())),
    }

    let slots: HashMap<(&str, u8), usize> = store
        .sessions
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.participant_id.as_str(), s.session_index), i))
        .collect();
    let mut taken: HashSet<(usize, u8)> = store
        .sessions
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.responses_for(&modality.name).map(move |r| (i, r.question_id)))
        .collect();

    let mut problems = Vec::new();
    let mut targets = Vec::with_capacity(records.len());
    for (n, rec) in records.iter().enumerate() {
        let at = format!("record {} ({}, session {}, question {})", n + 1, rec.participant, rec.session, rec.question);
        if rec.modality != modality.name {
            problems.push(format!("{at}: modality `{}` where `{}` expected", rec.modality, modality.name));
            continue;
        }
        if !(1..=MAX_SESSION_INDEX).contains(&rec.session) {
            problems.push(format!("{at}: session outside [1, {MAX_SESSION_INDEX}]"));
            continue;
        }
        if !(1..=QUESTIONS_PER_SESSION).contains(&rec.question) {
            problems.push(format!("{at}: question outside [1, {QUESTIONS_PER_SESSION}]"));
            continue;
        }
        if rec.vector.len() != modality.dimension {
            problems.push(format!(
                "{at}: dimension mismatch, expected {} got {}",
                modality.dimension,
                rec.vector.len()
            ));
            continue;
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            problems.push(format!("{at}: non-finite value"));
            continue;
        }
        let Some(&slot) = slots.get(&(rec.participant.as_str(), rec.session)) else {
            problems.push(format!("{at}: unknown participant/session"));
            continue;
        };
        if !taken.insert((slot, rec.question)) {
            problems.push(format!("{at}: duplicate question"));
            continue;
        }
        targets.push(slot);
    }
    if !problems.is_empty() {
        return Err(Error::Ingest(problems));
    }

    let touched: HashSet<usize> = targets.iter().copied().collect();
    let count = records.len();
    for (rec, slot) in records.into_iter().zip(targets) {
        store.sessions[slot].responses.push(ResponseFeature {
            question_id: rec.question,
            modality: rec.modality,
            vector: rec.vector,
        });
    }
    store.canonicalize();
    Ok(IngestSummary {
        records: count,
        sessions_touched: touched.len(),
    })
}

/// A session's pooled vector for one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeature {
    pub participant_id: String,
    pub session_index: u8,
    pub modality: String,
    pub vector: Vec<f64>,
}

/// Element-wise arithmetic mean of equal-length vectors.
pub fn mean_vector<'a>(vectors: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(Error::Empty("no vectors to average"))?;
    let mut sum = first.to_vec();
    let mut n = 1usize;
    for v in iter {
        if v.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                actual: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    let n = n as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

/// Averages every response of `modality` in `session` (however many were recorded).
pub fn pool_session(session: &SessionRecord, modality: &ModalitySpec) -> Result<SessionFeature> {
    let vectors: Vec<&[f64]> = session
        .responses_for(&modality.name)
        .map(|r| r.vector.as_slice())
        .collect();
    if vectors.is_empty() {
        return Err(Error::Invalid(format!(
            "session ({}, {}) has no `{}` responses",
            session.participant_id, session.session_index, modality.name
        )));
    }
    if let Some(bad) = vectors.iter().find(|v| v.len() != modality.dimension) {
        return Err(Error::DimensionMismatch {
            expected: modality.dimension,
            actual: bad.len(),
        });
    }
    Ok(SessionFeature {
        participant_id: session.participant_id.clone(),
        session_index: session.session_index,
        modality: modality.name.clone(),
        vector: mean_vector(vectors)?,
    })
}

/// Per-dimension minimum and maximum of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = rows.into_iter();
        let first = iter.next().ok_or(Error::Empty("no vectors to fit a scaler on"))?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in iter {
            if row.len() != min.len() {
                return Err(Error::DimensionMismatch {
                    expected: min.len(),
                    actual: row.len(),
                });
            }
            for (d, &x) in row.iter().enumerate() {
                if x < min[d] {
                    min[d] = x;
                }
                if x > max[d] {
                    max[d] = x;
                }
            }
        }
        Ok(Self { min, max })
    }

    pub fn dimension(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)` per dimension, 0 where the range is zero.
    /// Values outside the fitted range are not clamped.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                actual: x.len(),
            });
        }
        for (d, v) in x.iter_mut().enumerate() {
            let range = self.max[d] - self.min[d];
            *v = if range == 0.0 { 0.0 } else { (*v - self.min[d]) / range };
        }
        Ok(())
    }
}

/// Concatenates two modality vectors.
pub fn fuse(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    fuse_all([a, b])
}

pub fn fuse_all<'a>(parts: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in parts {
        if part.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fusion input".into()));
        }
        out.extend_from_slice(part);
    }
    Ok(out)
}
