//! Participants, sessions, labels and modalities.
//!
//! A [`CohortStore`] is the single source of truth for everything downstream.
//! Its fields are public so that malformed stores can be represented and
//! reported by [`validate_cohort`]; builders assume a store that validates
//! cleanly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features;

/// MoCA scores at or above this value are labelled healthy.
pub const MOCA_CUTOFF: u8 = 26;
pub const MOCA_MAX: u8 = 30;
pub const MAX_SESSION_INDEX: u8 = 7;
pub const QUESTIONS_PER_SESSION: u8 = 18;

pub const COHORT_SCHEMA: &str = "longicog-cohort/1";
pub const COHORT_FILE: &str = "cohort.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CognitiveState {
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "MCI")]
    Mci,
}

impl CognitiveState {
    pub const ALL: [CognitiveState; 2] = [CognitiveState::Hc, CognitiveState::Mci];

    /// Class index used by the learners: HC = 0, MCI = 1.
    pub fn index(self) -> usize {
        match self {
            CognitiveState::Hc => 0,
            CognitiveState::Mci => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CognitiveState::Hc => "HC",
            CognitiveState::Mci => "MCI",
        }
    }
}

impl fmt::Display for CognitiveState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeLabel {
    #[serde(rename = "improved")]
    Improved,
    #[serde(rename = "decline")]
    Decline,
    #[serde(rename = "no_change")]
    NoChange,
}

impl ChangeLabel {
    pub const ALL: [ChangeLabel; 3] = [
        ChangeLabel::Improved,
        ChangeLabel::Decline,
        ChangeLabel::NoChange,
    ];

    /// Class index used by the learners: improved = 0, decline = 1, no change = 2.
    pub fn index(self) -> usize {
        match self {
            ChangeLabel::Improved => 0,
            ChangeLabel::Decline => 1,
            ChangeLabel::NoChange => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChangeLabel::Improved => "improved",
            ChangeLabel::Decline => "decline",
            ChangeLabel::NoChange => "no_change",
        }
    }
}

impl fmt::Display for ChangeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps a MoCA score to a cognitive state: HC iff `score >= 26`.
pub fn derive_state(moca_score: i64) -> Result<CognitiveState> {
    if !(0..=i64::from(MOCA_MAX)).contains(&moca_score) {
        return Err(Error::ScoreOutOfRange(moca_score));
    }
    Ok(if moca_score >= i64::from(MOCA_CUTOFF) {
        CognitiveState::Hc
    } else {
        CognitiveState::Mci
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub name: String,
    pub dimension: usize,
}

impl ModalitySpec {
    pub fn new(name: impl Into<String>, dimension: usize) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Invalid("modality name must not be empty".into()));
        }
        if dimension == 0 {
            return Err(Error::Invalid(format!("modality `{name}` has dimension 0")));
        }
        Ok(Self { name, dimension })
    }

    /// eGeMAPS functionals.
    pub fn egemaps() -> Self {
        Self {
            name: "egemaps".into(),
            dimension: 88,
        }
    }

    /// ComParE-2016 functionals.
    pub fn compare2016() -> Self {
        Self {
            name: "compare2016".into(),
            dimension: 6373,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFeature {
    pub question_id: u8,
    pub modality: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub participant_id: String,
    pub session_index: u8,
    pub moca_score: u8,
    pub state: CognitiveState,
    pub responses: Vec<ResponseFeature>,
}

impl SessionRecord {
    pub fn new(participant_id: impl Into<String>, session_index: u8, moca_score: u8) -> Result<Self> {
        let state = derive_state(i64::from(moca_score))?;
        if !(1..=MAX_SESSION_INDEX).contains(&session_index) {
            return Err(Error::Invalid(format!(
                "session index {session_index} outside [1, {MAX_SESSION_INDEX}]"
            )));
        }
        Ok(Self {
            participant_id: participant_id.into(),
            session_index,
            moca_score,
            state,
            responses: Vec::new(),
        })
    }

    pub fn responses_for<'a>(&'a self, modality: &'a str) -> impl Iterator<Item = &'a ResponseFeature> + 'a {
        self.responses.iter().filter(move |r| r.modality == modality)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sex: Option<String>,
    #[serde(skip)]
    pub session_indices: BTreeSet<u8>,
}

impl Participant {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CohortStore {
    pub modalities: Vec<ModalitySpec>,
    pub participants: Vec<Participant>,
    pub sessions: Vec<SessionRecord>,
}

impl CohortStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn modality(&self, name: &str) -> Option<&ModalitySpec> {
        self.modalities.iter().find(|m| m.name == name)
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.id == id)
    }

    pub fn add_modality(&mut self, spec: ModalitySpec) -> Result<()> {
        if self.modality(&spec.name).is_some() {
            return Err(Error::Invalid(format!("modality `{}` already declared", spec.name)));
        }
        self.modalities.push(spec);
        Ok(())
    }

    pub fn add_participant(&mut self, participant: Participant) -> Result<()> {
        if self.participant(&participant.id).is_some() {
            return Err(Error::Invalid(format!("duplicate participant `{}`", participant.id)));
        }
        self.participants.push(participant);
        Ok(())
    }

    /// Adds a session, keeping the owning participant's index set in sync.
    pub fn add_session(&mut self, session: SessionRecord) -> Result<()> {
        let participant = self
            .participants
            .iter_mut()
            .find(|p| p.id == session.participant_id)
            .ok_or_else(|| Error::Invalid(format!("unknown participant `{}`", session.participant_id)))?;
        if !participant.session_indices.insert(session.session_index) {
            return Err(Error::Invalid(format!(
                "duplicate session ({}, {})",
                session.participant_id, session.session_index
            )));
        }
        self.sessions.push(session);
        Ok(())
    }

    pub fn session(&self, participant_id: &str, session_index: u8) -> Option<&SessionRecord> {
        self.sessions
            .iter()
            .find(|s| s.participant_id == participant_id && s.session_index == session_index)
    }

    /// Sessions of one participant in temporal order.
    pub fn sessions_of(&self, participant_id: &str) -> Vec<&SessionRecord> {
        let mut out: Vec<_> = self
            .sessions
            .iter()
            .filter(|s| s.participant_id == participant_id)
            .collect();
        out.sort_by_key(|s| s.session_index);
        out
    }

    /// Participant ids in lexicographic order.
    pub fn participant_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.participants.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    /// Orders each session's responses by (declared modality position, question id).
    ///
    /// Persistence writes and reads responses in this order, so round-trip
    /// equality holds for canonical stores.
    pub fn canonicalize(&mut self) {
        let rank: HashMap<&str, usize> = self
            .modalities
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.as_str(), i))
            .collect();
        for session in &mut self.sessions {
            session.responses.sort_by_key(|r| {
                (rank.get(r.modality.as_str()).copied().unwrap_or(usize::MAX), r.question_id)
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateModality { modality: String },
    ZeroDimension { modality: String },
    DuplicateParticipant { participant: String },
    SessionIndexMismatch { participant: String },
    UnknownParticipant { participant: String, session: u8 },
    DuplicateSession { participant: String, session: u8 },
    SessionOutOfRange { participant: String, session: u8 },
    MocaOutOfRange { participant: String, session: u8, moca: u8 },
    StateMismatch { participant: String, session: u8 },
    QuestionOutOfRange { participant: String, session: u8, question: u8 },
    UnknownModality { participant: String, session: u8, modality: String },
    DuplicateQuestion { participant: String, session: u8, modality: String, question: u8 },
    DimensionMismatch {
        participant: String,
        session: u8,
        question: u8,
        modality: String,
        expected: usize,
        actual: usize,
    },
    NonFinite { participant: String, session: u8, question: u8, modality: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Finding::*;
        match self {
            DuplicateModality { modality } => write!(f, "modality `{modality}` declared twice"),
            ZeroDimension { modality } => write!(f, "modality `{modality}` has dimension 0"),
            DuplicateParticipant { participant } => write!(f, "participant `{participant}` declared twice"),
            SessionIndexMismatch { participant } => {
                write!(f, "participant `{participant}`: session index set disagrees with session records")
            }
            UnknownParticipant { participant, session } => {
                write!(f, "session ({participant}, {session}) references an unknown participant")
            }
            DuplicateSession { participant, session } => write!(f, "duplicate session ({participant}, {session})"),
            SessionOutOfRange { participant, session } => {
                write!(f, "session ({participant}, {session}): index outside [1, {MAX_SESSION_INDEX}]")
            }
            MocaOutOfRange { participant, session, moca } => {
                write!(f, "session ({participant}, {session}): MoCA {moca} outside [0, {MOCA_MAX}]")
            }
            StateMismatch { participant, session } => {
                write!(f, "session ({participant}, {session}): state disagrees with MoCA score")
            }
            QuestionOutOfRange { participant, session, question } => {
                write!(f, "session ({participant}, {session}): question {question} outside [1, {QUESTIONS_PER_SESSION}]")
            }
            UnknownModality { participant, session, modality } => {
                write!(f, "session ({participant}, {session}): unknown modality `{modality}`")
            }
            DuplicateQuestion { participant, session, modality, question } => {
                write!(f, "session ({participant}, {session}): question {question} repeated under `{modality}`")
            }
            DimensionMismatch { participant, session, question, modality, expected, actual } => write!(
                f,
                "session ({participant}, {session}) question {question}: `{modality}` vector has length {actual}, expected {expected}"
            ),
            NonFinite { participant, session, question, modality } => {
                write!(f, "session ({participant}, {session}) question {question}: non-finite value under `{modality}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.findings.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation in `store`. Empty iff the store is well-formed.
pub fn validate_cohort(store: &CohortStore) -> ValidationReport {
    let mut findings = Vec::new();

    let mut dims: HashMap<&str, usize> = HashMap::new();
    for m in &store.modalities {
        if dims.insert(&m.name, m.dimension).is_some() {
            findings.push(Finding::DuplicateModality { modality: m.name.clone() });
        }
        if m.dimension == 0 {
            findings.push(Finding::ZeroDimension { modality: m.name.clone() });
        }
    }

    let mut declared: HashMap<&str, &Participant> = HashMap::new();
    for p in &store.participants {
        if declared.insert(&p.id, p).is_some() {
            findings.push(Finding::DuplicateParticipant { participant: p.id.clone() });
        }
    }

    let mut seen_sessions: HashSet<(&str, u8)> = HashSet::new();
    let mut observed: BTreeMap<&str, BTreeSet<u8>> = BTreeMap::new();
    for s in &store.sessions {
        let pid = s.participant_id.as_str();
        let idx = s.session_index;
        if !declared.contains_key(pid) {
            findings.push(Finding::UnknownParticipant { participant: pid.into(), session: idx });
        }
        if !seen_sessions.insert((pid, idx)) {
            findings.push(Finding::DuplicateSession { participant: pid.into(), session: idx });
        }
        observed.entry(pid).or_default().insert(idx);
        if !(1..=MAX_SESSION_INDEX).contains(&idx) {
            findings.push(Finding::SessionOutOfRange { participant: pid.into(), session: idx });
        }
        match derive_state(i64::from(s.moca_score)) {
            Err(_) => findings.push(Finding::MocaOutOfRange {
                participant: pid.into(),
                session: idx,
                moca: s.moca_score,
            }),
            Ok(state) if state != s.state => {
                findings.push(Finding::StateMismatch { participant: pid.into(), session: idx })
            }
            Ok(_) => {}
        }

        let mut questions: HashSet<(&str, u8)> = HashSet::new();
        for r in &s.responses {
            let q = r.question_id;
            if !(1..=QUESTIONS_PER_SESSION).contains(&q) {
                findings.push(Finding::QuestionOutOfRange { participant: pid.into(), session: idx, question: q });
            }
            let Some(&expected) = dims.get(r.modality.as_str()) else {
                findings.push(Finding::UnknownModality {
                    participant: pid.into(),
                    session: idx,
                    modality: r.modality.clone(),
                });
                continue;
            };
            if !questions.insert((&r.modality, q)) {
                findings.push(Finding::DuplicateQuestion {
                    participant: pid.into(),
                    session: idx,
                    modality: r.modality.clone(),
                    question: q,
                });
            }
            if r.vector.len() != expected {
                findings.push(Finding::DimensionMismatch {
                    participant: pid.into(),
                    session: idx,
                    question: q,
                    modality: r.modality.clone(),
                    expected,
                    actual: r.vector.len(),
                });
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                findings.push(Finding::NonFinite {
                    participant: pid.into(),
                    session: idx,
                    question: q,
                    modality: r.modality.clone(),
                });
            }
        }
    }

    let empty = BTreeSet::new();
    for p in &store.participants {
        let actual = observed.get(p.id.as_str()).unwrap_or(&empty);
        if &p.session_indices != actual {
            findings.push(Finding::SessionIndexMismatch { participant: p.id.clone() });
        }
    }

    ValidationReport { findings }
}

#[derive(Serialize, Deserialize)]
struct CohortDocument {
    schema: String,
    modalities: Vec<ModalitySpec>,
    participants: Vec<Participant>,
    sessions: Vec<SessionMeta>,
}

#[derive(Serialize, Deserialize)]
struct SessionMeta {
    participant: String,
    session: u8,
    moca: u8,
    state: CognitiveState,
}

/// Path of the feature file holding one modality's responses.
pub fn feature_file(dir: &Path, modality: &str) -> std::path::PathBuf {
    dir.join(format!("{modality}.jsonl"))
}

/// Writes `store` as a cohort directory: `cohort.json` plus `<modality>.jsonl`
/// per declared modality.
pub fn save_cohort(store: &CohortStore, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let doc = CohortDocument {
        schema: COHORT_SCHEMA.into(),
        modalities: store.modalities.clone(),
        participants: store.participants.clone(),
        sessions: store
            .sessions
            .iter()
            .map(|s| SessionMeta {
                participant: s.participant_id.clone(),
                session: s.session_index,
                moca: s.moca_score,
                state: s.state,
            })
            .collect(),
    };
    let path = dir.join(COHORT_FILE);
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

    for modality in &store.modalities {
        let records = store.sessions.iter().flat_map(|s| {
            s.responses_for(&modality.name).map(move |r| features::FeatureRecord {
                participant: s.participant_id.clone(),
                session: s.session_index,
                question: r.question_id,
                modality: r.modality.clone(),
                vector: r.vector.clone(),
            })
        });
        features::write_feature_file(feature_file(dir, &modality.name), records)?;
    }
    Ok(())
}

/// Reads a cohort directory written by [`save_cohort`].
pub fn load_cohort(dir: impl AsRef<Path>) -> Result<CohortStore> {
    let dir = dir.as_ref();
    let path = dir.join(COHORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc: CohortDocument = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if doc.schema != COHORT_SCHEMA {
        return Err(Error::Schema(doc.schema));
    }

    let mut store = CohortStore {
        modalities: doc.modalities,
        participants: doc.participants,
        sessions: Vec::with_capacity(doc.sessions.len()),
    };
    for meta in doc.sessions {
        let derived = derive_state(i64::from(meta.moca))?;
        if derived != meta.state {
            return Err(Error::Invalid(format!(
                "session ({}, {}): stored state {} disagrees with MoCA {}",
                meta.participant, meta.session, meta.state, meta.moca
            )));
        }
        if let Some(p) = store.participants.iter_mut().find(|p| p.id == meta.participant) {
            p.session_indices.insert(meta.session);
        }
        store.sessions.push(SessionRecord {
            participant_id: meta.participant,
            session_index: meta.session,
            moca_score: meta.moca,
            state: derived,
            responses: Vec::new(),
        });
    }

    for modality in store.modalities.clone() {
        let file = feature_file(dir, &modality.name);
        if file.exists() {
            features::ingest_features(&file, &modality, &mut store)?;
        }
    }
    store.canonicalize();
    Ok(store)
}
