//! HTTP facade over registration, challenge sessions and the gated content
//! store.
//!
//! [`Service`] holds the state and enforces the rules; [`router`] maps the
//! endpoint table onto it:
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/accounts` | `{account_id?}` | `{account_id}` |
//! | POST | `/accounts/{id}/bootstrap` | `{mode, manifest_or_corpus}` | 202 `{job_id}` |
//! | GET | `/accounts/{id}/bootstrap/{job}` | | `{status, results_so_far, ..}` |
//! | GET | `/accounts/{id}/faces/{image_id}` | | crop bytes (`image/x-portable-pixmap`) |
//! | POST | `/accounts/{id}/registration` | `{image_ids, secret}` | 201 |
//! | POST | `/accounts/{id}/sessions` | `{consequence, seed?}` | `{session_id, grid, consequence}` |
//! | POST | `/sessions/{sid}/moves` | `{axis, index, delta}` | `{transcript_len}` |
//! | POST | `/sessions/{sid}/submit` | `{}` | `{status, failures, locked}` |
//! | GET | `/resources/{rid}?session={sid}` | | 200 content or 403 |
//!
//! Errors are `{code, message}` with one of the [`ErrorCode`]s. No reply ever
//! carries the secret.

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::auth::{
    self, AuthError, AuthSession, Consequence, SessionStatus, Verdict, DEFAULT_SESSION_TTL_SECS,
};
use crate::bootstrap::{
    self, friends_from_corpus, load_manifest, BootstrapError, FriendJob, IndexEntry, Mode,
    PipelineConfig, PipelineProgress, SidecarDetector, Skipped,
};
use crate::grid::{GridError, ImageId, Move, COLS, ROWS};
use crate::store::{self, AccountRecord, AuditEntry, Store, StoreError};

pub const DEFAULT_LISTEN_ADDR: &str = "127.0.0.1:8080";
pub const DEFAULT_DATA_DIR: &str = "./data";
pub const BOOTSTRAP_WORKERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    Cardinality,
    Duplicate,
    SecretInvalid,
    SessionState,
    Locked,
    Integrity,
    NotFound,
    InvalidRequest,
    Forbidden,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::Cardinality
            | ErrorCode::Duplicate
            | ErrorCode::SecretInvalid
            | ErrorCode::InvalidRequest => StatusCode::BAD_REQUEST,
            ErrorCode::SessionState => StatusCode::CONFLICT,
            ErrorCode::Locked => StatusCode::LOCKED,
            ErrorCode::Integrity => StatusCode::INTERNAL_SERVER_ERROR,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Forbidden => StatusCode::FORBIDDEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn http_status(&self) -> StatusCode {
        self.code.status()
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("{what} not found"))
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<AuthError> for ApiError {
    fn from(e: AuthError) -> Self {
        let code = match &e {
            AuthError::Cardinality { .. } => ErrorCode::Cardinality,
            AuthError::Duplicate(_) => ErrorCode::Duplicate,
            AuthError::Secret(_) => ErrorCode::SecretInvalid,
            AuthError::Locked => ErrorCode::Locked,
            AuthError::SessionState(_) => ErrorCode::SessionState,
            AuthError::Grid(_) => ErrorCode::InvalidRequest,
        };
        Self::new(code, e.to_string())
    }
}

impl From<GridError> for ApiError {
    fn from(e: GridError) -> Self {
        Self::new(ErrorCode::InvalidRequest, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidId(_) => Self::new(ErrorCode::InvalidRequest, e.to_string()),
            _ => Self::new(ErrorCode::Integrity, e.to_string()),
        }
    }
}

impl From<BootstrapError> for ApiError {
    fn from(e: BootstrapError) -> Self {
        Self::new(ErrorCode::InvalidRequest, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(ErrorCode::InvalidRequest, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.http_status(), Json(self)).into_response()
    }
}

/// An item in the simulated content store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatedResource {
    pub resource_id: String,
    pub title: String,
    pub consequence_required: Consequence,
}

pub fn default_catalog() -> Vec<GatedResource> {
    vec![
        GatedResource {
            resource_id: "film-001".into(),
            title: "Library film (included with access)".into(),
            consequence_required: Consequence::Access,
        },
        GatedResource {
            resource_id: "film-002".into(),
            title: "New release (purchase)".into(),
            consequence_required: Consequence::Payment,
        },
    ]
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub session_ttl_secs: u64,
    pub catalog: Vec<GatedResource>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            session_ttl_secs: DEFAULT_SESSION_TTL_SECS,
            catalog: default_catalog(),
        }
    }
}

// Request and response bodies.

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateAccount {
    #[serde(default)]
    pub account_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccountCreated {
    pub account_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapRequest {
    pub mode: Mode,
    /// Tag manifest (jill) or photo directory (jack), on the server's disk.
    pub manifest_or_corpus: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapAccepted {
    pub job_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapStatus {
    pub status: JobStatus,
    pub total: usize,
    pub done: usize,
    /// Faces finished so far, in completion order.
    pub results_so_far: Vec<IndexEntry>,
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistrationRequest {
    pub image_ids: Vec<ImageId>,
    pub secret: Vec<ImageId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Registered {
    pub account_id: String,
    pub images: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionRequest {
    pub consequence: Consequence,
    /// Fixed seed for reproducible challenges; random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub grid: Vec<ImageId>,
    pub consequence: Consequence,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveAccepted {
    pub transcript_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResult {
    pub status: Verdict,
    pub failures: u32,
    pub locked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceContent {
    pub resource_id: String,
    pub title: String,
    pub consequence: Consequence,
    pub content: String,
}

struct AccountState {
    record: AccountRecord,
    sessions: HashMap<String, AuthSession>,
}

enum JobState {
    Running(Arc<PipelineProgress>),
    Finished {
        progress: Arc<PipelineProgress>,
        error: Option<String>,
    },
}

struct Job {
    account_id: String,
    state: JobState,
}

type Clock = Box<dyn Fn() -> u64 + Send + Sync>;

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

/// Shared service state. Operations on one account are serialized by that
/// account's lock; different accounts proceed independently.
pub struct Service {
    config: ServiceConfig,
    store: Store,
    accounts: Mutex<HashMap<String, Arc<Mutex<AccountState>>>>,
    session_owner: Mutex<HashMap<String, String>>,
    jobs: Arc<Mutex<HashMap<String, Job>>>,
    clock: Clock,
}

impl Service {
    pub fn open(config: ServiceConfig) -> Result<Self, ApiError> {
        Self::with_clock(config, Box::new(unix_now))
    }

    pub fn with_clock(config: ServiceConfig, clock: Clock) -> Result<Self, ApiError> {
        let store = Store::open(&config.data_dir)?;
        Ok(Self {
            config,
            store,
            accounts: Mutex::new(HashMap::new()),
            session_owner: Mutex::new(HashMap::new()),
            jobs: Arc::new(Mutex::new(HashMap::new())),
            clock,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn account(&self, account_id: &str) -> Result<Arc<Mutex<AccountState>>, ApiError> {
        let mut accounts = lock(&self.accounts);
        if let Some(a) = accounts.get(account_id) {
            return Ok(Arc::clone(a));
        }
        let record = self
            .store
            .load(account_id)?
            .ok_or_else(|| ApiError::not_found(format!("account {account_id}")))?;
        let state = Arc::new(Mutex::new(AccountState {
            record,
            sessions: HashMap::new(),
        }));
        accounts.insert(account_id.to_string(), Arc::clone(&state));
        Ok(state)
    }

    fn session_account(&self, session_id: &str) -> Result<Arc<Mutex<AccountState>>, ApiError> {
        let owner = lock(&self.session_owner)
            .get(session_id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("session {session_id}")))?;
        self.account(&owner)
    }

    pub fn create_account(&self, account_id: Option<String>) -> Result<String, ApiError> {
        let account_id = account_id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        store::validate_account_id(&account_id)?;
        let mut accounts = lock(&self.accounts);
        if accounts.contains_key(&account_id) || self.store.load(&account_id)?.is_some() {
            return Err(ApiError::new(
                ErrorCode::InvalidRequest,
                format!("account {account_id} already exists"),
            ));
        }
        let record = AccountRecord::new(&account_id);
        self.store.persist(&record)?;
        accounts.insert(
            account_id.clone(),
            Arc::new(Mutex::new(AccountState {
                record,
                sessions: HashMap::new(),
            })),
        );
        Ok(account_id)
    }

    /// Output directory for an account's bootstrap runs.
    pub fn bootstrap_dir(&self, account_id: &str) -> PathBuf {
        self.config.data_dir.join("bootstrap").join(account_id)
    }

    pub fn start_bootstrap(
        &self,
        account_id: &str,
        req: BootstrapRequest,
    ) -> Result<String, ApiError> {
        let account = self.account(account_id)?;
        let friends: Vec<FriendJob> = match req.mode {
            Mode::Jill => load_manifest(&req.manifest_or_corpus)?
                .into_iter()
                .map(FriendJob::from)
                .collect(),
            Mode::Jack => friends_from_corpus(&req.manifest_or_corpus)?,
        };
        let config = PipelineConfig {
            mode: req.mode,
            workers: BOOTSTRAP_WORKERS,
            output_dir: self.bootstrap_dir(account_id),
        };
        let index_path = config.index_path();
        let handle = bootstrap::run_pipeline(config, friends, Arc::new(SidecarDetector))?;
        let progress = handle.progress();
        let job_id = uuid::Uuid::new_v4().simple().to_string();
        lock(&self.jobs).insert(
            job_id.clone(),
            Job {
                account_id: account_id.to_string(),
                state: JobState::Running(Arc::clone(&progress)),
            },
        );
        {
            let mut acct = lock(&account);
            acct.record.face_index_path = Some(index_path);
            let record = acct.record.clone();
            self.store.persist(&record)?;
        }
        let jobs = Arc::clone(&self.jobs);
        let id = job_id.clone();
        std::thread::spawn(move || {
            let error = handle.join().err().map(|e| e.to_string());
            if let Some(job) = lock(&jobs).get_mut(&id) {
                job.state = JobState::Finished { progress, error };
            }
        });
        Ok(job_id)
    }

    pub fn bootstrap_status(
        &self,
        account_id: &str,
        job_id: &str,
    ) -> Result<BootstrapStatus, ApiError> {
        let jobs = lock(&self.jobs);
        let job = jobs
            .get(job_id)
            .filter(|j| j.account_id == account_id)
            .ok_or_else(|| ApiError::not_found(format!("bootstrap job {job_id}")))?;
        let (progress, status, error) = match &job.state {
            JobState::Running(p) => (p, JobStatus::Running, None),
            JobState::Finished { progress, error } => (
                progress,
                if error.is_some() {
                    JobStatus::Failed
                } else {
                    JobStatus::Done
                },
                error.clone(),
            ),
        };
        let snap = progress.snapshot();
        Ok(BootstrapStatus {
            status,
            total: snap.total,
            done: snap.done,
            results_so_far: snap.images.iter().map(IndexEntry::from).collect(),
            skipped: snap.skipped,
            error,
        })
    }

    /// Bytes of a bootstrapped crop.
    pub fn face_crop(&self, account_id: &str, image_id: &str) -> Result<Vec<u8>, ApiError> {
        let id = ImageId::new(image_id)?;
        if !id
            .as_str()
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-')
        {
            return Err(ApiError::not_found(format!("image {image_id}")));
        }
        self.account(account_id)?;
        let path: PathBuf = PipelineConfig {
            mode: Mode::Jill,
            workers: 1,
            output_dir: self.bootstrap_dir(account_id),
        }
        .crops_dir()
        .join(format!("{id}.ppm"));
        fs::read(&path).map_err(|_| ApiError::not_found(format!("image {image_id}")))
    }

    pub fn register(
        &self,
        account_id: &str,
        req: RegistrationRequest,
    ) -> Result<Registered, ApiError> {
        let account = self.account(account_id)?;
        let mut acct = lock(&account);
        if acct.record.registration.is_some() {
            return Err(ApiError::new(
                ErrorCode::InvalidRequest,
                format!("account {account_id} is already registered"),
            ));
        }
        let reg = auth::register(account_id, &req.image_ids, &req.secret, (self.clock)())?;
        let mut record = acct.record.clone();
        record.registration = Some(reg);
        self.store.persist(&record)?;
        acct.record = record;
        Ok(Registered {
            account_id: account_id.to_string(),
            images: req.image_ids.len(),
        })
    }

    /// Opens a challenge. Any session already open for the account is
    /// expired first, so at most one is open at a time.
    pub fn start_session(
        &self,
        account_id: &str,
        req: SessionRequest,
    ) -> Result<SessionCreated, ApiError> {
        let account = self.account(account_id)?;
        let mut acct = lock(&account);
        let reg = acct
            .record
            .registration
            .clone()
            .ok_or_else(|| ApiError::not_found(format!("registration for {account_id}")))?;
        if acct.record.lockout.locked {
            // `tetrad unlock` edits the record on disk while we may be running
            if let Some(on_disk) = self.store.load(account_id)? {
                acct.record.lockout = on_disk.lockout;
            }
        }
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let seed = req.seed.unwrap_or_else(rand::random);
        let session = auth::start_session(
            &reg,
            &acct.record.lockout,
            seed,
            req.consequence,
            session_id.clone(),
            (self.clock)(),
        )?;
        for s in acct.sessions.values_mut() {
            if s.status == SessionStatus::Open {
                s.status = SessionStatus::Expired;
            }
        }
        let created = SessionCreated {
            session_id: session_id.clone(),
            rows: ROWS,
            cols: COLS,
            grid: session.initial_grid.cells().to_vec(),
            consequence: session.consequence,
        };
        acct.sessions.insert(session_id.clone(), session);
        lock(&self.session_owner).insert(session_id, account_id.to_string());
        Ok(created)
    }

    fn with_session<T>(
        &self,
        session_id: &str,
        f: impl FnOnce(&mut AccountState, &str) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let account = self.session_account(session_id)?;
        let mut acct = lock(&account);
        let now = (self.clock)();
        let ttl = self.config.session_ttl_secs;
        acct.sessions
            .get_mut(session_id)
            .ok_or_else(|| ApiError::not_found(format!("session {session_id}")))?
            .expire_if_stale(now, ttl);
        f(&mut acct, session_id)
    }

    pub fn record_move(&self, session_id: &str, m: Move) -> Result<usize, ApiError> {
        self.with_session(session_id, |acct, sid| {
            let session = acct.sessions.get_mut(sid).expect("checked");
            Ok(session.record_move(m)?)
        })
    }

    /// Replays the transcript server-side, updates lockout and persists the
    /// outcome with an audit entry.
    pub fn submit(&self, session_id: &str) -> Result<SubmitResult, ApiError> {
        self.with_session(session_id, |acct, sid| {
            let reg = acct.record.registration.clone().ok_or_else(|| {
                ApiError::new(ErrorCode::Integrity, "session without registration")
            })?;
            let mut record = acct.record.clone();
            let mut session = acct.sessions.get(sid).expect("checked").clone();
            let verdict = session.submit(&reg.secret, &mut record.lockout)?;
            record.audit.push(AuditEntry {
                session_id: sid.to_string(),
                seed: session.seed,
                transcript: session.transcript.clone(),
                consequence: session.consequence,
                verdict,
            });
            self.store.persist(&record)?;
            acct.record = record;
            acct.sessions.insert(sid.to_string(), session);
            Ok(SubmitResult {
                status: verdict,
                failures: acct.record.lockout.consecutive_failures,
                locked: acct.record.lockout.locked,
            })
        })
    }

    pub fn session_status(&self, session_id: &str) -> Result<SessionStatus, ApiError> {
        self.with_session(session_id, |acct, sid| Ok(acct.sessions[sid].status))
    }

    /// Content stub, served only to an accepted session whose consequence
    /// matches the resource's.
    pub fn resource(
        &self,
        resource_id: &str,
        session_id: Option<&str>,
    ) -> Result<ResourceContent, ApiError> {
        let res = self
            .config
            .catalog
            .iter()
            .find(|r| r.resource_id == resource_id)
            .ok_or_else(|| ApiError::not_found(format!("resource {resource_id}")))?;
        let forbidden = |why: &str| ApiError::new(ErrorCode::Forbidden, why.to_string());
        let sid = session_id.ok_or_else(|| forbidden("authentication required"))?;
        let (status, consequence) = self
            .with_session(sid, |acct, sid| {
                let s = &acct.sessions[sid];
                Ok((s.status, s.consequence))
            })
            .map_err(|_| forbidden("unknown session"))?;
        if status != SessionStatus::Accepted {
            return Err(forbidden("session not accepted"));
        }
        if consequence != res.consequence_required {
            return Err(forbidden("session was opened for a different consequence"));
        }
        Ok(ResourceContent {
            resource_id: res.resource_id.clone(),
            title: res.title.clone(),
            consequence,
            content: format!("<stream of {}>", res.resource_id),
        })
    }

    /// Re-derives every audited verdict from the persisted record and checks
    /// it against the recorded one.
    pub fn audit(&self, account_id: &str) -> Result<bool, ApiError> {
        let record = self
            .store
            .load(account_id)?
            .ok_or_else(|| ApiError::not_found(format!("account {account_id}")))?;
        let Some(reg) = record.registration else {
            return Ok(record.audit.is_empty());
        };
        for entry in &record.audit {
            if store::audit_replay(&reg, entry)? != entry.verdict {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

type Shared = Arc<Service>;

async fn create_account(
    State(svc): State<Shared>,
    body: axum::body::Bytes,
) -> Result<Json<AccountCreated>, ApiError> {
    // the body is optional
    let req: CreateAccount = if body.iter().all(u8::is_ascii_whitespace) {
        CreateAccount::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(ErrorCode::InvalidRequest, e.to_string()))?
    };
    let account_id = svc.create_account(req.account_id)?;
    Ok(Json(AccountCreated { account_id }))
}

async fn start_bootstrap(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<BootstrapRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<BootstrapAccepted>), ApiError> {
    let Json(req) = body?;
    let job_id = svc.start_bootstrap(&id, req)?;
    Ok((StatusCode::ACCEPTED, Json(BootstrapAccepted { job_id })))
}

async fn bootstrap_status(
    State(svc): State<Shared>,
    UrlPath((id, job)): UrlPath<(String, String)>,
) -> Result<Json<BootstrapStatus>, ApiError> {
    Ok(Json(svc.bootstrap_status(&id, &job)?))
}

async fn face_crop(
    State(svc): State<Shared>,
    UrlPath((id, image)): UrlPath<(String, String)>,
) -> Result<impl IntoResponse, ApiError> {
    let bytes = svc.face_crop(&id, &image)?;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], bytes))
}

async fn register(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<RegistrationRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Registered>), ApiError> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(svc.register(&id, req)?)))
}

async fn start_session(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> Result<Json<SessionCreated>, ApiError> {
    let Json(req) = body?;
    Ok(Json(svc.start_session(&id, req)?))
}

async fn record_move(
    State(svc): State<Shared>,
    UrlPath(sid): UrlPath<String>,
    body: Result<Json<Move>, JsonRejection>,
) -> Result<Json<MoveAccepted>, ApiError> {
    let Json(m) = body?;
    let transcript_len = svc.record_move(&sid, m)?;
    Ok(Json(MoveAccepted { transcript_len }))
}

async fn submit(
    State(svc): State<Shared>,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<SubmitResult>, ApiError> {
    Ok(Json(svc.submit(&sid)?))
}

#[derive(Debug, Deserialize)]
struct ResourceQuery {
    session: Option<String>,
}

async fn resource(
    State(svc): State<Shared>,
    UrlPath(rid): UrlPath<String>,
    Query(q): Query<ResourceQuery>,
) -> Result<Json<ResourceContent>, ApiError> {
    Ok(Json(svc.resource(&rid, q.session.as_deref())?))
}

pub fn router(svc: Shared) -> Router {
    Router::new()
        .route("/accounts", post(create_account))
        .route("/accounts/{id}/bootstrap", post(start_bootstrap))
        .route("/accounts/{id}/bootstrap/{job}", get(bootstrap_status))
        .route("/accounts/{id}/faces/{image}", get(face_crop))
        .route("/accounts/{id}/registration", post(register))
        .route("/accounts/{id}/sessions", post(start_session))
        .route("/sessions/{sid}/moves", post(record_move))
        .route("/sessions/{sid}/submit", post(submit))
        .route("/resources/{rid}", get(resource))
        .with_state(svc)
}

/// Serves until Ctrl-C.
pub async fn serve(listen: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let svc = Arc::new(Service::open(config).map_err(std::io::Error::other)?);
    let listener = tokio::net::TcpListener::bind(listen).await?;
    eprintln!("tetrad listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A server on its own thread and runtime, bound to an ephemeral local
/// port. Stops when dropped.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    pub service: Shared,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(config: ServiceConfig) -> std::io::Result<Self> {
        let service = Arc::new(Service::open(config).map_err(std::io::Error::other)?);
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = router(Arc::clone(&service));
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .expect("tokio runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self {
            addr,
            service,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Where a bootstrap for `account_id` writes its index under `data_dir`.
pub fn face_index_path(data_dir: &Path, account_id: &str) -> PathBuf {
    PipelineConfig {
        mode: Mode::Jill,
        workers: 1,
        output_dir: data_dir.join("bootstrap").join(account_id),
    }
    .index_path()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{solve_alignment, synthetic_images, Grid};
    use std::sync::atomic::{AtomicU64, Ordering};

    fn service(dir: &Path) -> Service {
        Service::open(ServiceConfig::new(dir)).unwrap()
    }

    fn registered(svc: &Service, id: &str) -> Vec<ImageId> {
        let ids = synthetic_images();
        svc.create_account(Some(id.into())).unwrap();
        let secret = vec![
            ids[3].clone(),
            ids[40].clone(),
            ids[12].clone(),
            ids[27].clone(),
        ];
        svc.register(
            id,
            RegistrationRequest {
                image_ids: ids,
                secret: secret.clone(),
            },
        )
        .unwrap();
        secret
    }

    fn session(svc: &Service, id: &str, c: Consequence, seed: u64) -> SessionCreated {
        svc.start_session(
            id,
            SessionRequest {
                consequence: c,
                seed: Some(seed),
            },
        )
        .unwrap()
    }

    fn solve(created: &SessionCreated, secret: &[ImageId]) -> Vec<Move> {
        let grid = Grid::from_cells(created.grid.clone()).unwrap();
        solve_alignment(&grid, &secret.to_vec().try_into().unwrap()).unwrap()
    }

    #[test]
    fn happy_path_and_resource_gate() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        let secret = registered(&svc, "ann");
        let s = session(&svc, "ann", Consequence::Access, 5);
        assert_eq!(s.consequence, Consequence::Access);
        let mut sorted = s.grid.clone();
        sorted.sort();
        assert_eq!(sorted, synthetic_images());
        assert_eq!(
            svc.resource("film-001", Some(&s.session_id))
                .unwrap_err()
                .code,
            ErrorCode::Forbidden
        );
        for m in solve(&s, &secret) {
            svc.record_move(&s.session_id, m).unwrap();
        }
        let r = svc.submit(&s.session_id).unwrap();
        assert_eq!(
            r,
            SubmitResult {
                status: Verdict::Accepted,
                failures: 0,
                locked: false
            }
        );
        assert_eq!(
            svc.resource("film-001", Some(&s.session_id))
                .unwrap()
                .resource_id,
            "film-001"
        );
        assert_eq!(
            svc.resource("film-002", Some(&s.session_id))
                .unwrap_err()
                .code,
            ErrorCode::Forbidden
        );
        assert_eq!(
            svc.resource("film-001", None).unwrap_err().code,
            ErrorCode::Forbidden
        );
        assert_eq!(
            svc.resource("film-404", Some(&s.session_id))
                .unwrap_err()
                .code,
            ErrorCode::NotFound
        );
        assert_eq!(
            svc.submit(&s.session_id).unwrap_err().code,
            ErrorCode::SessionState
        );
        assert!(svc.audit("ann").unwrap());
    }

    #[test]
    fn lockout_and_unlock() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        registered(&svc, "bo");
        for seed in 0..3 {
            let s = session(&svc, "bo", Consequence::Payment, seed);
            let r = svc.submit(&s.session_id).unwrap();
            assert_eq!(r.status, Verdict::Rejected);
            assert_eq!(r.failures, seed as u32 + 1);
        }
        let err = svc
            .start_session(
                "bo",
                SessionRequest {
                    consequence: Consequence::Access,
                    seed: None,
                },
            )
            .unwrap_err();
        assert_eq!(err.code, ErrorCode::Locked);
        assert_eq!(err.http_status(), StatusCode::LOCKED);
        drop(svc);
        svc_store_unlock(dir.path(), "bo");
        let svc = service(dir.path());
        assert!(svc
            .start_session(
                "bo",
                SessionRequest {
                    consequence: Consequence::Access,
                    seed: None
                }
            )
            .is_ok());
        assert!(svc.audit("bo").unwrap());
    }

    fn svc_store_unlock(dir: &Path, id: &str) {
        Store::open(dir).unwrap().unlock(id).unwrap();
    }

    #[test]
    fn registration_errors() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        svc.create_account(Some("cy".into())).unwrap();
        let ids = synthetic_images();
        let err = |image_ids: Vec<ImageId>, secret: Vec<ImageId>| {
            svc.register("cy", RegistrationRequest { image_ids, secret })
                .unwrap_err()
                .code
        };
        assert_eq!(
            err(ids[..44].to_vec(), ids[..4].to_vec()),
            ErrorCode::Cardinality
        );
        let mut dup = ids.clone();
        dup[0] = dup[1].clone();
        assert_eq!(err(dup, ids[1..5].to_vec()), ErrorCode::Duplicate);
        assert_eq!(
            err(ids.clone(), ids[..3].to_vec()),
            ErrorCode::SecretInvalid
        );
        assert_eq!(
            svc.register(
                "nobody",
                RegistrationRequest {
                    image_ids: ids.clone(),
                    secret: ids[..4].to_vec()
                }
            )
            .unwrap_err()
            .code,
            ErrorCode::NotFound
        );
        assert_eq!(
            svc.create_account(Some("cy".into())).unwrap_err().code,
            ErrorCode::InvalidRequest
        );
        assert_eq!(
            svc.create_account(Some("../etc".into())).unwrap_err().code,
            ErrorCode::InvalidRequest
        );
    }

    #[test]
    fn one_open_session_and_expiry() {
        let dir = tempfile::tempdir().unwrap();
        let now = Arc::new(AtomicU64::new(1_000));
        let clock = Arc::clone(&now);
        let svc = Service::with_clock(
            ServiceConfig::new(dir.path()),
            Box::new(move || clock.load(Ordering::SeqCst)),
        )
        .unwrap();
        registered(&svc, "di");
        let first = session(&svc, "di", Consequence::Access, 1);
        let second = session(&svc, "di", Consequence::Access, 2);
        assert_eq!(
            svc.session_status(&first.session_id).unwrap(),
            SessionStatus::Expired
        );
        assert_eq!(
            svc.record_move(&first.session_id, Move::row(0, 1))
                .unwrap_err()
                .code,
            ErrorCode::SessionState
        );
        assert_eq!(
            svc.record_move(&second.session_id, Move::row(0, 1))
                .unwrap(),
            1
        );
        assert_eq!(
            svc.record_move(&second.session_id, Move::row(0, 0))
                .unwrap_err()
                .code,
            ErrorCode::InvalidRequest
        );
        now.fetch_add(DEFAULT_SESSION_TTL_SECS, Ordering::SeqCst);
        assert_eq!(
            svc.submit(&second.session_id).unwrap_err().code,
            ErrorCode::SessionState
        );
        assert_eq!(
            svc.session_status(&second.session_id).unwrap(),
            SessionStatus::Expired
        );
    }

    #[test]
    fn responses_never_carry_the_secret_positions() {
        let dir = tempfile::tempdir().unwrap();
        let svc = service(dir.path());
        registered(&svc, "ed");
        let s = session(&svc, "ed", Consequence::Access, 9);
        let json = serde_json::to_value(&s).unwrap();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        assert!(!keys.iter().any(|k| k.contains("secret")));
    }
}
