//! Seeded synthetic cohorts with a planted class signal.
//!
//! Each participant has a latent state that may flip at every session
//! boundary. A response vector is the state's class mean plus session noise
//! (shared by every response of the session) plus independent response noise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cohort::{
    CognitiveState, CohortStore, ModalitySpec, Participant, ResponseFeature, SessionRecord, MAX_SESSION_INDEX, MOCA_CUTOFF,
    MOCA_MAX, QUESTIONS_PER_SESSION,
};
use crate::error::{Error, Result};

/// `participants` participants with `sessions` sessions each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleBlock {
    pub participants: usize,
    pub sessions: u8,
}

/// Sessions-per-participant schedule written as `34x7+1x5`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<ScheduleBlock>);

impl Schedule {
    pub fn participants(&self) -> usize {
        self.0.iter().map(|b| b.participants).sum()
    }

    pub fn sessions(&self) -> usize {
        self.0.iter().map(|b| b.participants * usize::from(b.sessions)).sum()
    }

    /// Session count of every participant, in order.
    pub fn expand(&self) -> Vec<u8> {
        self.0
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.sessions, b.participants))
            .collect()
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self(vec![
            ScheduleBlock {
                participants: 34,
                sessions: 7,
            },
            ScheduleBlock {
                participants: 1,
                sessions: 5,
            },
        ])
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| format!("{}x{}", b.participants, b.sessions)).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("schedule `{s}` is not of the form 34x7+1x5"));
        s.split(['+', ','])
            .map(|part| {
                let (p, n) = part.trim().split_once(['x', '×']).ok_or_else(bad)?;
                Ok(ScheduleBlock {
                    participants: p.trim().parse().map_err(|_| bad())?,
                    sessions: n.trim().parse().map_err(|_| bad())?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Schedule)
    }
}

/// MoCA synthesis: `round(N(mean_state, sd))`, then clamped into the score
/// range of the latent state so that the derived label always agrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MocaRule {
    pub mean_hc: f64,
    pub mean_mci: f64,
    pub sd: f64,
}

impl Default for MocaRule {
    fn default() -> Self {
        Self {
            mean_hc: 27.3,
            mean_mci: 22.9,
            sd: 1.5,
        }
    }
}

impl MocaRule {
    fn draw<R: Rng>(&self, state: CognitiveState, rng: &mut R) -> Result<u8> {
        let mean = match state {
            CognitiveState::Hc => self.mean_hc,
            CognitiveState::Mci => self.mean_mci,
        };
        let raw = Normal::new(mean, self.sd)
            .map_err(|e| Error::Invalid(format!("moca rule: {e}")))?
            .sample(rng)
            .round();
        let (lo, hi) = match state {
            CognitiveState::Hc => (f64::from(MOCA_CUTOFF), f64::from(MOCA_MAX)),
            CognitiveState::Mci => (0.0, f64::from(MOCA_CUTOFF - 1)),
        };
        Ok(raw.clamp(lo, hi) as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_participants: usize,
    pub schedule: Schedule,
    pub n_questions: u8,
    pub modalities: Vec<ModalitySpec>,
    /// Class-mean separation on each informative dimension (MCI at `+δ/2`, HC at `−δ/2`).
    pub delta: f64,
    /// Leading dimensions of every modality that carry the class signal.
    pub informative_dims: usize,
    pub session_noise: f64,
    pub response_noise: f64,
    /// Probability of a state flip at each session boundary.
    pub p_flip: f64,
    /// Probability that a participant starts in MCI.
    pub mci_prior: f64,
    pub moca: MocaRule,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_participants: 35,
            schedule: Schedule::default(),
            n_questions: QUESTIONS_PER_SESSION,
            modalities: vec![ModalitySpec {
                name: "acoustic".into(),
                dimension: 32,
            }],
            delta: 0.5,
            informative_dims: 8,
            session_noise: 1.5,
            response_noise: 0.5,
            p_flip: 0.1,
            mci_prior: 20.0 / 35.0,
            moca: MocaRule::default(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invalid(m));
        if self.schedule.participants() != self.n_participants {
            return fail(format!(
                "schedule {} covers {} participants, expected {}",
                self.schedule,
                self.schedule.participants(),
                self.n_participants
            ));
        }
        if let Some(b) = self.schedule.0.iter().find(|b| !(1..=MAX_SESSION_INDEX).contains(&b.sessions)) {
            return fail(format!("{} sessions outside [1, {MAX_SESSION_INDEX}]", b.sessions));
        }
        if !(1..=QUESTIONS_PER_SESSION).contains(&self.n_questions) {
            return fail(format!("{} questions outside [1, {QUESTIONS_PER_SESSION}]", self.n_questions));
        }
        if self.modalities.is_empty() {
            return fail("at least one modality is required".into());
        }
        for m in &self.modalities {
            ModalitySpec::new(m.name.clone(), m.dimension)?;
            if m.dimension < self.informative_dims {
                return fail(format!(
                    "modality `{}` has {} dims, fewer than {} informative",
                    m.name, m.dimension, self.informative_dims
                ));
            }
        }
        for (name, v) in [
            ("delta", self.delta),
            ("session noise", self.session_noise),
            ("response noise", self.response_noise),
            ("moca sd", self.moca.sd),
        ] {
            if !v.is_finite() || v < 0.0 {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, p) in [("p_flip", self.p_flip), ("mci prior", self.mci_prior)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !self.moca.mean_hc.is_finite() || !self.moca.mean_mci.is_finite() {
            return fail("moca means must be finite".into());
        }
        Ok(())
    }
}

fn participant_id(i: usize, n: usize) -> String {
    let width = n.to_string().len().max(2);
    format!("P{:0width$}", i + 1)
}

fn noise<R: Rng>(sd: f64, len: usize, rng: &mut R) -> Vec<f64> {
    if sd == 0.0 {
        return vec![0.0; len];
    }
    let normal = Normal::new(0.0, sd).expect("validated sd");
    (0..len).map(|_| normal.sample(rng)).collect()
}

/// Generates a cohort from one sequential random stream.
pub fn generate_cohort(config: &SynthConfig) -> Result<CohortStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut store = CohortStore::new();
    for m in &config.modalities {
        store.add_modality(m.clone())?;
    }

    for (p, n_sessions) in config.schedule.expand().into_iter().enumerate() {
        let id = participant_id(p, config.n_participants);
        store.add_participant(Participant::new(id.clone()))?;
        let mut state = if rng.gen_bool(config.mci_prior) {
            CognitiveState::Mci
        } else {
            CognitiveState::Hc
        };
        for s in 1..=n_sessions {
            if s > 1 && rng.gen_bool(config.p_flip) {
                state = match state {
                    CognitiveState::Hc => CognitiveState::Mci,
                    CognitiveState::Mci => CognitiveState::Hc,
                };
            }
            let moca = config.moca.draw(state, &mut rng)?;
            let mut session = SessionRecord::new(id.clone(), s, moca)?;
            debug_assert_eq!(session.state, state);
            let offset = match state {
                CognitiveState::Hc => -config.delta / 2.0,
                CognitiveState::Mci => config.delta / 2.0,
            };
            for m in &config.modalities {
                let session_eps = noise(config.session_noise, m.dimension, &mut rng);
                for q in 1..=config.n_questions {
                    let response_eps = noise(config.response_noise, m.dimension, &mut rng);
                    let vector = (0..m.dimension)
                        .map(|d| {
                            let mean = if d < config.informative_dims { offset } else { 0.0 };
                            mean + session_eps[d] + response_eps[d]
                        })
                        .collect();
                    session.responses.push(ResponseFeature {
                        question_id: q,
                        modality: m.name.clone(),
                        vector,
                    });
                }
            }
            store.add_session(session)?;
        }
    }
    store.canonicalize();
    Ok(store)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CohortSummary {
    pub participants: usize,
    pub sessions: usize,
    pub hc_sessions: usize,
    pub mci_sessions: usize,
    /// Consecutive-session state changes HC → MCI.
    pub hc_to_mci: usize,
    /// Consecutive-session state changes MCI → HC.
    pub mci_to_hc: usize,
    /// MCI share of sessions; 0 for an empty cohort.
    pub mci_fraction: f64,
}

impl CohortSummary {
    pub fn transitions(&self) -> usize {
        self.hc_to_mci + self.mci_to_hc
    }
}

pub fn describe_cohort(store: &CohortStore) -> CohortSummary {
    let mut summary = CohortSummary {
        participants: store.participants.len(),
        sessions: store.sessions.len(),
        ..Default::default()
    };
    for s in &store.sessions {
        match s.state {
            CognitiveState::Hc => summary.hc_sessions += 1,
            CognitiveState::Mci => summary.mci_sessions += 1,
        }
    }
    for id in store.participant_ids() {
        for w in store.sessions_of(id).windows(2) {
            match (w[0].state, w[1].state) {
                (CognitiveState::Hc, CognitiveState::Mci) => summary.hc_to_mci += 1,
                (CognitiveState::Mci, CognitiveState::Hc) => summary.mci_to_hc += 1,
                _ => {}
            }
        }
    }
    if summary.sessions > 0 {
        summary.mci_fraction = summary.mci_sessions as f64 / summary.sessions as f64;
    }
    summary
}
