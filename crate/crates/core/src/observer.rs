//! Shoulder-surfing model.
//!
//! The observer sees the initial grid, every gesture and the final grid. From
//! one accepted session that narrows the secret down to the 72 ordered
//! tuples read off the final grid's windows; repeated observations of the
//! same account are intersected. The on-screen keyboard baseline leaks the
//! secret outright.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::auth::{self, LockoutState, Registration, Verdict};
use crate::grid::{
    self, candidates, enumerate_windows, rng_from_seed, solve_to_window, synthetic_images, Grid,
    GridError, ImageId, Move, Secret, WindowKind, CELLS, WINDOW_LEN,
};

pub const DEFAULT_PASSWORD_BASELINE_ACTIONS: usize = 9;

#[derive(Debug, Error)]
pub enum ObserverError {
    #[error("observed final grid does not match the replayed transcript")]
    Integrity,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Auth(#[from] auth::AuthError),
}

pub type Tuple = [ImageId; WINDOW_LEN];

/// Everything visible on screen during one authentication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub initial_grid: Grid,
    pub transcript: Vec<Move>,
    pub final_grid: Grid,
}

impl Observation {
    /// Derives the final grid by replay.
    pub fn record(initial_grid: Grid, transcript: Vec<Move>) -> Result<Self, GridError> {
        let final_grid = grid::replay(&initial_grid, &transcript)?;
        Ok(Self {
            initial_grid,
            transcript,
            final_grid,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub tuples: BTreeSet<Tuple>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, secret: &Secret) -> bool {
        self.tuples.contains(secret.images())
    }
}

/// The candidate set of one observed session. The supplied final grid must
/// agree with a replay of the transcript.
pub fn observe(obs: &Observation) -> Result<CandidateSet, ObserverError> {
    let replayed = grid::replay(&obs.initial_grid, &obs.transcript)?;
    if replayed != obs.final_grid {
        return Err(ObserverError::Integrity);
    }
    Ok(CandidateSet {
        tuples: candidates(&replayed).into_iter().collect(),
    })
}

pub fn intersect_sessions(sets: &[CandidateSet]) -> Result<CandidateSet, ObserverError> {
    let (first, rest) = sets
        .split_first()
        .ok_or_else(|| ObserverError::Invalid("need at least one candidate set".into()))?;
    let mut acc = first.tuples.clone();
    for set in rest {
        acc.retain(|t| set.tuples.contains(t));
    }
    Ok(CandidateSet { tuples: acc })
}

/// Session index (1-based) at which the intersection first became unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(from = "SessionsToUniqueRepr")]
pub enum SessionsToUnique {
    Reached(usize),
    NotReached,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SessionsToUniqueRepr {
    Reached(usize),
    NotReached(serde::de::IgnoredAny),
}

impl From<SessionsToUniqueRepr> for SessionsToUnique {
    fn from(r: SessionsToUniqueRepr) -> Self {
        match r {
            SessionsToUniqueRepr::Reached(n) => Self::Reached(n),
            SessionsToUniqueRepr::NotReached(_) => Self::NotReached,
        }
    }
}

impl Serialize for SessionsToUnique {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Reached(n) => s.serialize_u64(*n as u64),
            Self::NotReached => s.serialize_str("not reached"),
        }
    }
}

impl fmt::Display for SessionsToUnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Reached(n) => write!(f, "{n}"),
            Self::NotReached => f.write_str("not reached"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub per_session_candidate_counts: Vec<usize>,
    pub intersection_sizes: Vec<usize>,
    pub sessions_to_unique: SessionsToUnique,
    pub baseline_keyboard_leak: usize,
    pub residual_bits: Vec<f64>,
}

impl AttackReport {
    fn from_counts(per_session: Vec<usize>, intersections: Vec<usize>) -> Self {
        let sessions_to_unique = intersections
            .iter()
            .position(|&n| n == 1)
            .map_or(SessionsToUnique::NotReached, |i| {
                SessionsToUnique::Reached(i + 1)
            });
        let residual_bits = intersections.iter().map(|&n| bits(n)).collect();
        Self {
            per_session_candidate_counts: per_session,
            intersection_sizes: intersections,
            sessions_to_unique,
            baseline_keyboard_leak: KEYBOARD_LEAK,
            residual_bits,
        }
    }
}

const KEYBOARD_LEAK: usize = 1;

pub fn bits(count: usize) -> f64 {
    (count as f64).log2()
}

/// Number of ordered 4-tuples of distinct images from the 45: 45*44*43*42.
pub fn ordered_secret_space() -> u64 {
    (0..WINDOW_LEN as u64).map(|k| CELLS as u64 - k).product()
}

/// A single observation of on-screen keyboard entry reveals the password.
pub fn keyboard_baseline() -> AttackReport {
    AttackReport::from_counts(vec![KEYBOARD_LEAK], vec![KEYBOARD_LEAK])
}

/// One authentication by the simulated user: fresh challenge, a uniformly
/// random horizontal target window, solver transcript.
pub fn simulated_observation<R: Rng>(
    reg: &Registration,
    seed: u64,
    rng: &mut R,
) -> Result<Observation, ObserverError> {
    let (_, initial) = auth::derive_initial_grid(reg, seed)?;
    let horizontal: Vec<_> = enumerate_windows()
        .iter()
        .filter(|w| w.kind == WindowKind::H)
        .collect();
    let target = horizontal[rng.random_range(0..horizontal.len())];
    let transcript = solve_to_window(&initial, &reg.secret, target.start.0, target.start.1)?;
    Ok(Observation::record(initial, transcript)?)
}

/// Runs `n_sessions` genuine authentications for `reg`, observes each and
/// intersects the candidate sets cumulatively.
pub fn simulate_attacker(
    reg: &Registration,
    n_sessions: usize,
    seed: u64,
) -> Result<AttackReport, ObserverError> {
    if n_sessions == 0 {
        return Err(ObserverError::Invalid(
            "n_sessions must be at least 1".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut per_session = Vec::with_capacity(n_sessions);
    let mut intersections = Vec::with_capacity(n_sessions);
    let mut acc: Option<CandidateSet> = None;
    for _ in 0..n_sessions {
        let session_seed: u64 = rng.random();
        let obs = simulated_observation(reg, session_seed, &mut rng)?;
        let set = observe(&obs)?;
        per_session.push(set.len());
        let next = match acc.take() {
            None => set,
            Some(prev) => intersect_sessions(&[prev, set])?,
        };
        intersections.push(next.len());
        acc = Some(next);
    }
    Ok(AttackReport::from_counts(per_session, intersections))
}

/// Synthetic account used by trial `seed`: the 45 `img-NN` ids and a secret
/// drawn from them with the same seed.
pub fn synthetic_registration(account_id: &str, seed: u64) -> Result<Registration, ObserverError> {
    let ids = synthetic_images();
    let mut rng = rng_from_seed(seed ^ 0x005E_C2E7);
    let picked: Vec<ImageId> = rand::seq::index::sample(&mut rng, CELLS, WINDOW_LEN)
        .into_iter()
        .map(|i| ids[i].clone())
        .collect();
    Ok(auth::register(account_id, &ids, &picked, 0)?)
}

/// Aggregate of many independent attacker trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub trials: usize,
    pub sessions: usize,
    pub seed: u64,
    pub prior_candidates: u64,
    pub prior_bits: f64,
    /// Per session index, means across trials.
    pub mean_candidate_counts: Vec<f64>,
    pub mean_intersection_sizes: Vec<f64>,
    pub mean_residual_bits: Vec<f64>,
    /// Index k holds the number of trials that became unique after k+1
    /// sessions; trials that never did are counted in `not_reached`.
    pub sessions_to_unique_histogram: Vec<usize>,
    pub not_reached: usize,
    pub median_sessions_to_unique: SessionsToUnique,
    pub unique_within_two_fraction: f64,
    pub keyboard_baseline: AttackReport,
    /// Single-session candidate count divided by the keyboard leak.
    pub tetrad_vs_keyboard_ratio: f64,
    pub reports: Vec<AttackReport>,
}

/// Trial `i` uses a synthetic registration and attacker stream both seeded
/// with `seed + i`. Trials run in parallel; the reduction is ordered.
pub fn run_attack_trials(
    trials: usize,
    sessions: usize,
    seed: u64,
) -> Result<AttackSummary, ObserverError> {
    if trials == 0 {
        return Err(ObserverError::Invalid("trials must be at least 1".into()));
    }
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = seed.wrapping_add(i);
            let reg = synthetic_registration(&format!("trial-{i}"), trial_seed)?;
            simulate_attacker(&reg, sessions, trial_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mean_at = |f: &dyn Fn(&AttackReport, usize) -> f64| -> Vec<f64> {
        (0..sessions)
            .map(|k| reports.iter().map(|r| f(r, k)).sum::<f64>() / trials as f64)
            .collect()
    };
    let mean_candidate_counts = mean_at(&|r, k| r.per_session_candidate_counts[k] as f64);
    let mean_intersection_sizes = mean_at(&|r, k| r.intersection_sizes[k] as f64);
    let mean_residual_bits = mean_at(&|r, k| r.residual_bits[k]);
    let mut histogram = vec![0; sessions];
    let mut not_reached = 0;
    let mut reached: Vec<usize> = Vec::new();
    for r in &reports {
        match r.sessions_to_unique {
            SessionsToUnique::Reached(n) => {
                histogram[n - 1] += 1;
                reached.push(n);
            }
            SessionsToUnique::NotReached => not_reached += 1,
        }
    }
    // lower median, with "not reached" ordered after every reached count
    reached.sort_unstable();
    let mid = (trials - 1) / 2;
    let median = reached.get(mid).map_or(SessionsToUnique::NotReached, |&n| {
        SessionsToUnique::Reached(n)
    });
    let within_two = reached.iter().filter(|&&n| n <= 2).count();
    let keyboard = keyboard_baseline();
    let single = reports[0].per_session_candidate_counts[0];
    Ok(AttackSummary {
        trials,
        sessions,
        seed,
        prior_candidates: ordered_secret_space(),
        prior_bits: bits(ordered_secret_space() as usize),
        mean_candidate_counts,
        mean_intersection_sizes,
        mean_residual_bits,
        sessions_to_unique_histogram: histogram,
        not_reached,
        median_sessions_to_unique: median,
        unique_within_two_fraction: within_two as f64 / trials as f64,
        tetrad_vs_keyboard_ratio: single as f64 / keyboard.per_session_candidate_counts[0] as f64,
        keyboard_baseline: keyboard,
        reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RegistrationFlow {
    /// Detector pipeline with separate select, secret-pick and order stages.
    Jack,
    /// Tag pipeline with a single-stage registration screen.
    Jill,
}

/// One user-visible stage of a registration flow and the minimum number of
/// taps it takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowStep {
    pub label: &'static str,
    pub actions: usize,
}

impl RegistrationFlow {
    pub fn steps(self) -> &'static [FlowStep] {
        match self {
            // ordering happens while assigning secret members, so it costs
            // no extra confirmations on the single screen
            RegistrationFlow::Jill => &[
                FlowStep {
                    label: "select friends",
                    actions: CELLS,
                },
                FlowStep {
                    label: "assign secret members",
                    actions: WINDOW_LEN,
                },
                FlowStep {
                    label: "ordering confirmations",
                    actions: 0,
                },
                FlowStep {
                    label: "complete",
                    actions: 1,
                },
            ],
            RegistrationFlow::Jack => &[
                FlowStep {
                    label: "select friends",
                    actions: CELLS,
                },
                FlowStep {
                    label: "continue",
                    actions: 1,
                },
                FlowStep {
                    label: "pick secret images",
                    actions: WINDOW_LEN,
                },
                FlowStep {
                    label: "continue",
                    actions: 1,
                },
                FlowStep {
                    label: "order sequence",
                    actions: WINDOW_LEN,
                },
                FlowStep {
                    label: "complete",
                    actions: 1,
                },
            ],
        }
    }

    pub fn registration_actions(self) -> usize {
        self.steps().iter().map(|s| s.actions).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffortReport {
    pub registration_actions: usize,
    pub auth_actions_mean: f64,
    pub password_baseline_actions: usize,
}

/// User effort: registration taps for the flow, mean gestures per
/// authentication (solver moves plus the submitting double-tap) over
/// `n_auth_trials` simulated sessions, and the password baseline.
pub fn effort_report(
    flow: RegistrationFlow,
    n_auth_trials: usize,
    seed: u64,
    password_baseline_actions: usize,
) -> Result<EffortReport, ObserverError> {
    if n_auth_trials == 0 {
        return Err(ObserverError::Invalid(
            "n_auth_trials must be at least 1".into(),
        ));
    }
    let total: usize = (0..n_auth_trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = seed.wrapping_add(i);
            let reg = synthetic_registration("effort", trial_seed)?;
            let mut rng = rng_from_seed(trial_seed);
            let obs = simulated_observation(&reg, rng.random(), &mut rng)?;
            debug_assert_eq!(
                auth::verify(&obs.initial_grid, &obs.transcript, &reg.secret)?,
                Verdict::Accepted
            );
            Ok::<_, ObserverError>(obs.transcript.len() + 1)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EffortReport {
        registration_actions: flow.registration_actions(),
        auth_actions_mean: total as f64 / n_auth_trials as f64,
        password_baseline_actions,
    })
}

/// Drives the simulated user through the full session API: start, record
/// the solver transcript, submit.
pub fn authenticate_simulated(
    reg: &Registration,
    lockout: &mut LockoutState,
    seed: u64,
) -> Result<Verdict, ObserverError> {
    let mut session = auth::start_session(
        reg,
        lockout,
        seed,
        auth::Consequence::Access,
        format!("sim-{seed}"),
        0,
    )?;
    for m in auth::witness_transcript(&session, &reg.secret)? {
        session.record_move(m)?;
    }
    Ok(session.submit(&reg.secret, lockout)?)
}
