//! Experiment and operator commands. Exit codes: 0 success, 1 validation
//! error or bad usage, 2 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use serde::Serialize;
use thiserror::Error;

use crate::auth::{self, Consequence, Verdict};
use crate::bootstrap::{
    self, friends_from_corpus, load_manifest, BootstrapError, FriendJob, Mode, PipelineConfig,
    SidecarDetector, Skipped,
};
use crate::client::{Backend, ClientError, HttpClient};
use crate::grid::{
    rng_from_seed, solve_alignment, synthetic_images, Grid, ImageId, CELLS, WINDOW_LEN,
};
use crate::observer::{
    self, run_attack_trials, AttackSummary, EffortReport, RegistrationFlow,
    DEFAULT_PASSWORD_BASELINE_ACTIONS,
};
use crate::service::{
    self, RegistrationRequest, Service, ServiceConfig, SessionRequest, DEFAULT_DATA_DIR,
    DEFAULT_LISTEN_ADDR,
};
use crate::store::{AccountRecord, Store, StoreError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<BootstrapError> for CliError {
    fn from(e: BootstrapError) -> Self {
        match e {
            BootstrapError::Io { .. } | BootstrapError::Format { .. } => Self::Io(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidId(_) => Self::Validation(e.to_string()),
            other => Self::Io(other.to_string()),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Api(api) if api.code == service::ErrorCode::Integrity => {
                Self::Io(api.to_string())
            }
            ClientError::Api(api) => Self::Validation(api.to_string()),
            ClientError::Transport(t) => Self::Io(t),
        }
    }
}

impl From<observer::ObserverError> for CliError {
    fn from(e: observer::ObserverError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<auth::AuthError> for CliError {
    fn from(e: auth::AuthError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "tetrad",
    version,
    about = "Tetrad graphical authentication: simulations, bootstrap and service"
)]
pub struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub output: OutputFormat,
    /// Account records and bootstrap output live here.
    #[arg(long, global = true, env = "DATA_DIR", default_value = DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract face crops from a tag manifest (jill) or photo corpus (jack).
    Bootstrap(BootstrapArgs),
    /// Register an account from a face index or synthetic images.
    Register(RegisterArgs),
    /// End-to-end authentications by the simulated user.
    AuthSim(AuthSimArgs),
    /// Shoulder-surfing attack simulation with intersection across sessions.
    AttackSim(AttackSimArgs),
    /// User effort of registration and authentication.
    EffortReport(EffortArgs),
    /// Clear an account's lockout.
    Unlock(UnlockArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Tag manifest (jill).
    #[arg(long, required_if_eq("mode", "jill"))]
    pub manifest: Option<PathBuf>,
    /// Directory of `*.ppm` photos with `.faces.json` sidecars (jack).
    #[arg(long, required_if_eq("mode", "jack"))]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Output directory; defaults to the data dir.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long)]
    pub account: String,
    /// `faces/index.json` from a bootstrap run; synthetic images when absent.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Exactly 45 comma-separated image ids; drawn with the seed when absent.
    #[arg(long, value_delimiter = ',')]
    pub images: Option<Vec<String>>,
    /// Four comma-separated image ids in order; drawn with the seed when absent.
    #[arg(long, value_delimiter = ',')]
    pub secret: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct AuthSimArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Base URL of a running service; an in-process service is used otherwise.
    #[arg(long)]
    pub remote: Option<String>,
}

#[derive(Debug, Args)]
pub struct AttackSimArgs {
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub sessions: u64,
}

#[derive(Debug, Args)]
pub struct EffortArgs {
    #[arg(long, value_enum, default_value_t = RegistrationFlow::Jill)]
    pub flow: RegistrationFlow,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Keystrokes plus submit for the password being compared against.
    #[arg(long, default_value_t = DEFAULT_PASSWORD_BASELINE_ACTIONS)]
    pub password_baseline: usize,
}

#[derive(Debug, Args)]
pub struct UnlockArgs {
    #[arg(long)]
    pub account: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "LISTEN_ADDR", default_value = DEFAULT_LISTEN_ADDR)]
    pub listen: SocketAddr,
    #[arg(long, env = "SESSION_TTL_SECS", default_value_t = auth::DEFAULT_SESSION_TTL_SECS)]
    pub session_ttl_secs: u64,
}

/// Parses `argv` (including the program name) and runs the command, writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    format: OutputFormat,
    value: &T,
    table: String,
) -> Result<(), CliError> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, value)
                .map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Table => write!(out, "{table}")?,
    }
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Bootstrap(a) => cmd_bootstrap(cli, a, out),
        Command::Register(a) => cmd_register(cli, a, out),
        Command::AuthSim(a) => cmd_auth_sim(cli, a, out),
        Command::AttackSim(a) => cmd_attack_sim(cli, a, out),
        Command::EffortReport(a) => cmd_effort(cli, a, out),
        Command::Unlock(a) => cmd_unlock(cli, a, out),
        Command::Serve(a) => cmd_serve(cli, a),
    }
}

#[derive(Debug, Serialize)]
struct BootstrapSummary {
    mode: Mode,
    workers: u64,
    extracted: usize,
    skipped: Vec<Skipped>,
    index_path: PathBuf,
}

fn cmd_bootstrap(cli: &Cli, a: &BootstrapArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let friends: Vec<FriendJob> = match a.mode {
        Mode::Jill => {
            let manifest = a
                .manifest
                .as_deref()
                .ok_or_else(|| CliError::Validation("--manifest is required".into()))?;
            load_manifest(manifest)?
                .into_iter()
                .map(FriendJob::from)
                .collect()
        }
        Mode::Jack => {
            let corpus = a
                .corpus
                .as_deref()
                .ok_or_else(|| CliError::Validation("--corpus is required".into()))?;
            friends_from_corpus(corpus)?
        }
    };
    let config = PipelineConfig {
        mode: a.mode,
        workers: a.workers as usize,
        output_dir: a.out.clone().unwrap_or_else(|| cli.data_dir.clone()),
    };
    let outcome = bootstrap::run_pipeline(config, friends, Arc::new(SidecarDetector))?.join()?;
    let summary = BootstrapSummary {
        mode: a.mode,
        workers: a.workers,
        extracted: outcome.images.len(),
        skipped: outcome.skipped,
        index_path: outcome.index_path,
    };
    let mut t = String::new();
    let _ = writeln!(t, "mode       {:?}", summary.mode);
    let _ = writeln!(t, "workers    {}", summary.workers);
    let _ = writeln!(t, "extracted  {}", summary.extracted);
    let _ = writeln!(t, "skipped    {}", summary.skipped.len());
    for s in &summary.skipped {
        let _ = writeln!(t, "  {} ({}): {}", s.friend_name, s.photo_id, s.reason);
    }
    let _ = writeln!(t, "index      {}", summary.index_path.display());
    emit(out, cli.output, &summary, t)
}

fn parse_ids(raw: &[String]) -> Result<Vec<ImageId>, CliError> {
    raw.iter()
        .map(|s| ImageId::new(s.trim()).map_err(|e| CliError::Validation(e.to_string())))
        .collect()
}

#[derive(Debug, Serialize)]
struct RegisterSummary {
    account_id: String,
    images: Vec<ImageId>,
    secret: Vec<ImageId>,
}

fn cmd_register(cli: &Cli, a: &RegisterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let available: Vec<ImageId> = match &a.index {
        Some(path) => bootstrap::read_index(path)?
            .into_iter()
            .map(|e| e.image_id)
            .collect(),
        None => synthetic_images(),
    };
    let mut rng = rng_from_seed(cli.seed);
    let images = match &a.images {
        Some(raw) => parse_ids(raw)?,
        None => {
            if available.len() < CELLS {
                return Err(CliError::Validation(format!(
                    "index holds {} faces, need at least {CELLS}",
                    available.len()
                )));
            }
            let mut picked: Vec<ImageId> = sample(&mut rng, available.len(), CELLS)
                .into_iter()
                .map(|i| available[i].clone())
                .collect();
            picked.sort();
            picked
        }
    };
    bootstrap::select_ids(&available, &images)?;
    let secret = match &a.secret {
        Some(raw) => parse_ids(raw)?,
        None => sample(&mut rng, images.len().min(CELLS), WINDOW_LEN)
            .into_iter()
            .map(|i| images[i].clone())
            .collect(),
    };
    let store = Store::open(&cli.data_dir)?;
    let mut record = store
        .load(&a.account)?
        .unwrap_or_else(|| AccountRecord::new(&a.account));
    if record.registration.is_some() {
        return Err(CliError::Validation(format!(
            "account {} is already registered",
            a.account
        )));
    }
    record.registration = Some(auth::register(
        &a.account,
        &images,
        &secret,
        service::unix_now(),
    )?);
    if let Some(index) = &a.index {
        record.face_index_path = Some(index.clone());
    }
    store.persist(&record)?;
    let summary = RegisterSummary {
        account_id: a.account.clone(),
        images,
        secret,
    };
    let mut t = String::new();
    let _ = writeln!(t, "account  {}", summary.account_id);
    let _ = writeln!(t, "images   {}", summary.images.len());
    let secret_line: Vec<&str> = summary.secret.iter().map(ImageId::as_str).collect();
    let _ = writeln!(t, "secret   {}", secret_line.join(" -> "));
    emit(out, cli.output, &summary, t)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthTrial {
    pub trial: u64,
    pub moves: usize,
    pub status: Verdict,
    pub resource_granted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthSimReport {
    pub trials: u64,
    pub seed: u64,
    pub accepted: usize,
    pub rejected: usize,
    pub results: Vec<AuthTrial>,
}

/// `trials` end-to-end logins: create an account, register a seeded secret,
/// open an access session, enter the solver transcript, submit, then fetch
/// the access-gated resource.
pub fn run_auth_sim(
    backend: &dyn Backend,
    trials: u64,
    seed: u64,
) -> Result<AuthSimReport, CliError> {
    let mut results = Vec::new();
    for trial in 0..trials {
        let trial_seed = seed.wrapping_add(trial);
        let reg = observer::synthetic_registration("sim", trial_seed)?;
        let account = backend.create_account(None)?;
        backend.register(
            &account,
            RegistrationRequest {
                image_ids: reg.image_ids.clone(),
                secret: reg.secret.images().to_vec(),
            },
        )?;
        let session = backend.start_session(
            &account,
            SessionRequest {
                consequence: Consequence::Access,
                seed: Some(trial_seed),
            },
        )?;
        let grid = Grid::from_cells(session.grid.clone())
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let moves =
            solve_alignment(&grid, &reg.secret).map_err(|e| CliError::Validation(e.to_string()))?;
        for m in &moves {
            backend.record_move(&session.session_id, *m)?;
        }
        let verdict = backend.submit(&session.session_id)?.status;
        let resource_granted = backend.resource("film-001", &session.session_id).is_ok();
        results.push(AuthTrial {
            trial,
            moves: moves.len(),
            status: verdict,
            resource_granted,
        });
    }
    let accepted = results
        .iter()
        .filter(|r| r.status == Verdict::Accepted)
        .count();
    Ok(AuthSimReport {
        trials,
        seed,
        accepted,
        rejected: results.len() - accepted,
        results,
    })
}

fn cmd_auth_sim(cli: &Cli, a: &AuthSimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = match &a.remote {
        Some(url) => run_auth_sim(&HttpClient::new(url.clone()), a.trials, cli.seed)?,
        None => {
            let dir = tempfile::tempdir()?;
            let svc = Service::open(ServiceConfig::new(dir.path()))
                .map_err(|e| CliError::Io(e.to_string()))?;
            run_auth_sim(&svc, a.trials, cli.seed)?
        }
    };
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:>5}  {:>5}  {:<8}  resource",
        "trial", "moves", "status"
    );
    for r in &report.results {
        let status = match r.status {
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected",
        };
        let granted = if r.resource_granted { "200" } else { "403" };
        let _ = writeln!(
            t,
            "{:>5}  {:>5}  {:<8}  {granted}",
            r.trial, r.moves, status
        );
    }
    let _ = writeln!(t, "accepted {}/{}", report.accepted, report.trials);
    emit(out, cli.output, &report, t)
}

/// Plain-text rendering of an attack summary. Every figure shown is a field
/// of the JSON form (possibly rounded).
pub fn attack_table(s: &AttackSummary) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "prior: {} ordered secrets, {:.2} bits ({} trials, {} sessions, seed {})",
        s.prior_candidates, s.prior_bits, s.trials, s.sessions, s.seed
    );
    let _ = writeln!(
        t,
        "{:<9} {:>10} {:>12} {:>13}",
        "session", "candidates", "intersection", "residual_bits"
    );
    for k in 0..s.sessions {
        let _ = writeln!(
            t,
            "{:<9} {:>10} {:>12} {:>13.2}",
            k + 1,
            trim(s.mean_candidate_counts[k]),
            trim(s.mean_intersection_sizes[k]),
            s.mean_residual_bits[k]
        );
    }
    let kb = &s.keyboard_baseline;
    let _ = writeln!(
        t,
        "{:<9} {:>10} {:>12} {:>13.2}",
        "keyboard",
        kb.per_session_candidate_counts[0],
        kb.intersection_sizes[0],
        kb.residual_bits[0]
    );
    let _ = writeln!(t, "sessions to unique:");
    for (k, n) in s.sessions_to_unique_histogram.iter().enumerate() {
        let _ = writeln!(t, "  {:<11} {n}", k + 1);
    }
    let _ = writeln!(t, "  {:<11} {}", "not reached", s.not_reached);
    let _ = writeln!(
        t,
        "median sessions to unique: {}",
        s.median_sessions_to_unique
    );
    let _ = writeln!(
        t,
        "unique within 2 sessions: {:.3}",
        s.unique_within_two_fraction
    );
    let _ = writeln!(
        t,
        "tetrad/keyboard candidate ratio: {}",
        trim(s.tetrad_vs_keyboard_ratio)
    );
    t
}

fn trim(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.3}")
    }
}

fn cmd_attack_sim(cli: &Cli, a: &AttackSimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let summary = run_attack_trials(a.trials as usize, a.sessions as usize, cli.seed)?;
    let table = attack_table(&summary);
    emit(out, cli.output, &summary, table)
}

fn cmd_effort(cli: &Cli, a: &EffortArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report: EffortReport =
        observer::effort_report(a.flow, a.trials as usize, cli.seed, a.password_baseline)?;
    let mut t = String::new();
    let _ = writeln!(t, "flow                       {:?}", a.flow);
    for step in a.flow.steps() {
        let _ = writeln!(t, "  {:<24} {}", step.label, step.actions);
    }
    let _ = writeln!(
        t,
        "registration_actions       {}",
        report.registration_actions
    );
    let _ = writeln!(
        t,
        "auth_actions_mean          {:.2}",
        report.auth_actions_mean
    );
    let source = if a.password_baseline == DEFAULT_PASSWORD_BASELINE_ACTIONS {
        " (configured default: 8 keystrokes + submit)"
    } else {
        " (configured)"
    };
    let _ = writeln!(
        t,
        "password_baseline_actions  {}{source}",
        report.password_baseline_actions
    );
    emit(out, cli.output, &report, t)
}

fn cmd_unlock(cli: &Cli, a: &UnlockArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let store = Store::open(&cli.data_dir)?;
    if store.load(&a.account)?.is_none() {
        return Err(CliError::Validation(format!("no account {}", a.account)));
    }
    let record = store.unlock(&a.account)?;
    let t = format!("unlocked {}\n", record.account_id);
    emit(out, cli.output, &record.lockout, t)
}

fn cmd_serve(cli: &Cli, a: &ServeArgs) -> Result<(), CliError> {
    let mut config = ServiceConfig::new(&cli.data_dir);
    config.session_ttl_secs = a.session_ttl_secs;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(a.listen, config))?;
    Ok(())
}
