//! Registration, challenge sessions, replay-based verification and lockout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    self, is_aligned, replay, shuffle_grid, validate_image_set, Grid, GridError, ImageId, Move,
    Secret, CELLS,
};

/// Consecutive failed submissions that lock an account.
pub const LOCKOUT_THRESHOLD: u32 = 3;

pub const DEFAULT_SESSION_TTL_SECS: u64 = 300;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuthError {
    #[error("expected {expected} images, got {actual}")]
    Cardinality { expected: usize, actual: usize },
    #[error("image {0} appears more than once")]
    Duplicate(ImageId),
    #[error("invalid secret: {0}")]
    Secret(String),
    #[error("account is locked")]
    Locked,
    #[error("session is {0:?}, not open")]
    SessionState(SessionStatus),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub account_id: String,
    /// Sorted, so two registrations of the same set compare equal.
    pub image_ids: Vec<ImageId>,
    pub secret: Secret,
    /// Unix seconds.
    pub created_at: u64,
}

/// Validates the 45-image set and the ordered 4-image secret drawn from it.
pub fn register(
    account_id: impl Into<String>,
    image_ids: &[ImageId],
    secret: &[ImageId],
    created_at: u64,
) -> Result<Registration, AuthError> {
    validate_image_set(image_ids).map_err(|e| match e {
        GridError::Cardinality { expected, actual } => AuthError::Cardinality { expected, actual },
        GridError::Duplicate(id) => AuthError::Duplicate(id),
        other => AuthError::Grid(other),
    })?;
    let secret = Secret::try_from(secret.to_vec())
        .map_err(|_| AuthError::Secret("must be 4 distinct images in order".into()))?;
    if let Some(stranger) = secret.images().iter().find(|id| !image_ids.contains(id)) {
        return Err(AuthError::Secret(format!(
            "{stranger} is not one of the {CELLS} images"
        )));
    }
    let mut image_ids = image_ids.to_vec();
    image_ids.sort();
    Ok(Registration {
        account_id: account_id.into(),
        image_ids,
        secret,
        created_at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Consequence {
    Access,
    Payment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Accepted,
    Rejected,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockoutState {
    pub consecutive_failures: u32,
    pub locked: bool,
}

impl LockoutState {
    pub fn record(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Accepted => self.consecutive_failures = 0,
            Verdict::Rejected => {
                self.consecutive_failures = (self.consecutive_failures + 1).min(LOCKOUT_THRESHOLD);
            }
        }
        self.locked = self.consecutive_failures >= LOCKOUT_THRESHOLD;
    }

    /// Administrative unlock.
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthSession {
    pub session_id: String,
    pub account_id: String,
    /// Seed actually used for the initial shuffle (after any re-derivation).
    pub seed: u64,
    pub initial_grid: Grid,
    pub transcript: Vec<Move>,
    pub status: SessionStatus,
    pub consequence: Consequence,
    /// Unix seconds.
    pub created_at: u64,
}

/// First seed at or after `seed` whose shuffle does not already align the
/// secret, along with that grid.
pub fn derive_initial_grid(reg: &Registration, seed: u64) -> Result<(u64, Grid), AuthError> {
    let mut s = seed;
    loop {
        let grid = shuffle_grid(&reg.image_ids, s)?;
        if !is_aligned(&grid, &reg.secret)? {
            return Ok((s, grid));
        }
        s = s.wrapping_add(1);
    }
}

pub fn start_session(
    reg: &Registration,
    lockout: &LockoutState,
    seed: u64,
    consequence: Consequence,
    session_id: impl Into<String>,
    now: u64,
) -> Result<AuthSession, AuthError> {
    if lockout.locked {
        return Err(AuthError::Locked);
    }
    let (seed, initial_grid) = derive_initial_grid(reg, seed)?;
    Ok(AuthSession {
        session_id: session_id.into(),
        account_id: reg.account_id.clone(),
        seed,
        initial_grid,
        transcript: Vec::new(),
        status: SessionStatus::Open,
        consequence,
        created_at: now,
    })
}

/// Pure replay check: does the transcript, applied to the initial grid,
/// leave the secret aligned?
pub fn verify(initial: &Grid, transcript: &[Move], secret: &Secret) -> Result<Verdict, AuthError> {
    let last = replay(initial, transcript)?;
    Ok(if is_aligned(&last, secret)? {
        Verdict::Accepted
    } else {
        Verdict::Rejected
    })
}

impl AuthSession {
    fn ensure_open(&self) -> Result<(), AuthError> {
        match self.status {
            SessionStatus::Open => Ok(()),
            other => Err(AuthError::SessionState(other)),
        }
    }

    pub fn record_move(&mut self, m: Move) -> Result<usize, AuthError> {
        self.ensure_open()?;
        m.validate()?;
        self.transcript.push(m);
        Ok(self.transcript.len())
    }

    pub fn current_grid(&self) -> Result<Grid, AuthError> {
        Ok(replay(&self.initial_grid, &self.transcript)?)
    }

    /// Marks an open session expired once `ttl_secs` have passed. Returns
    /// whether the session is (now) expired.
    pub fn expire_if_stale(&mut self, now: u64, ttl_secs: u64) -> bool {
        if self.status == SessionStatus::Open && now.saturating_sub(self.created_at) >= ttl_secs {
            self.status = SessionStatus::Expired;
        }
        self.status == SessionStatus::Expired
    }

    /// Closes the session. The verdict comes from replaying the transcript
    /// server-side; a rejection counts towards lockout, an acceptance clears
    /// the failure counter.
    pub fn submit(
        &mut self,
        secret: &Secret,
        lockout: &mut LockoutState,
    ) -> Result<Verdict, AuthError> {
        self.ensure_open()?;
        let verdict = verify(&self.initial_grid, &self.transcript, secret)?;
        self.status = match verdict {
            Verdict::Accepted => SessionStatus::Accepted,
            Verdict::Rejected => SessionStatus::Rejected,
        };
        lockout.record(verdict);
        Ok(verdict)
    }
}

/// Transcript a user who knows the secret would enter.
pub fn witness_transcript(session: &AuthSession, secret: &Secret) -> Result<Vec<Move>, AuthError> {
    Ok(grid::solve_alignment(&session.initial_grid, secret)?)
}
