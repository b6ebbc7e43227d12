//! HTTP service.
//!
//! A single writer task owns the [`Engine`]. Mutating requests are sent to
//! it over a channel and answered through a oneshot; after each command the
//! writer publishes an immutable [`Snapshot`] that read endpoints serve
//! directly. Optimization runs are jobs executed on the blocking pool.

mod engine;

use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ips_core::{render_text, run_ladder, run_scenario, MetricsReport, Scenario, ScenarioResult};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot, watch};

pub use engine::{
    AddedContainer, ApiError, AppointmentRequest, BlockDelta, BookingOutcome, ContainerInput,
    Engine, HistogramView, LiveMetrics, RebalanceOutcome, ScheduleView, YardView,
};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message, "version": self.version });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub id: u64,
    pub scenario: u8,
    pub seed: u64,
    pub status: JobStatus,
    /// State version the run started from.
    pub submitted_version: u64,
    /// Whether the result replaced the live yard and schedule.
    pub applied: bool,
    pub report: Option<String>,
    pub result: Option<ScenarioResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRequest {
    pub scenario: u8,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobAccepted {
    pub version: u64,
    pub job_id: u64,
    pub status: JobStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobView {
    pub version: u64,
    #[serde(flatten)]
    pub job: Job,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub scenario: u8,
    pub pt: Option<f64>,
    pub m: usize,
    pub seed: Option<u64>,
    pub rehandles: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsView {
    pub version: u64,
    pub live: LiveMetrics,
    pub ladder: Vec<LadderRow>,
    pub report: Option<MetricsReport>,
    pub note: Option<String>,
}

/// Everything the read endpoints need, frozen at one version.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub engine: Engine,
    pub jobs: BTreeMap<u64, Arc<Job>>,
}

enum Command {
    AddContainer(
        ContainerInput,
        oneshot::Sender<Result<AddedContainer, ApiError>>,
    ),
    Book(
        AppointmentRequest,
        oneshot::Sender<Result<BookingOutcome, ApiError>>,
    ),
    Rebalance(oneshot::Sender<RebalanceOutcome>),
    StartJob(
        OptimizeRequest,
        oneshot::Sender<Result<JobAccepted, ApiError>>,
    ),
    FinishJob {
        id: u64,
        outcome: Result<ScenarioResult, String>,
    },
}

#[derive(Clone)]
pub struct AppState {
    commands: mpsc::Sender<Command>,
    snapshots: watch::Receiver<Arc<Snapshot>>,
}

impl AppState {
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshots.borrow().clone()
    }

    async fn ask<T>(
        &self,
        make: impl FnOnce(oneshot::Sender<T>) -> Command,
    ) -> Result<T, ApiError> {
        let (tx, rx) = oneshot::channel();
        let stopped = || ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: "state writer stopped".into(),
            version: self.snapshot().engine.version(),
        };
        self.commands.send(make(tx)).await.map_err(|_| stopped())?;
        rx.await.map_err(|_| stopped())
    }
}

struct Writer {
    engine: Engine,
    jobs: BTreeMap<u64, Arc<Job>>,
    next_job: u64,
    publish: watch::Sender<Arc<Snapshot>>,
    /// Lets finished jobs report back without keeping the channel open.
    inbox: mpsc::WeakSender<Command>,
}

impl Writer {
    fn publish(&self) {
        self.publish.send_replace(Arc::new(Snapshot {
            engine: self.engine.clone(),
            jobs: self.jobs.clone(),
        }));
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::AddContainer(input, reply) => {
                let _ = reply.send(self.engine.add_container(input));
            }
            Command::Book(req, reply) => {
                let _ = reply.send(self.engine.book(req));
            }
            Command::Rebalance(reply) => {
                let _ = reply.send(self.engine.rebalance());
            }
            Command::StartJob(req, reply) => {
                let _ = reply.send(self.start_job(req));
            }
            Command::FinishJob { id, outcome } => self.finish_job(id, outcome),
        }
    }

    fn start_job(&mut self, req: OptimizeRequest) -> Result<JobAccepted, ApiError> {
        let Some(scenario) = Scenario::from_number(req.scenario) else {
            return Err(self.engine.error(
                StatusCode::BAD_REQUEST,
                format!("scenario must be 1 to 4, got {}", req.scenario),
            ));
        };
        self.next_job += 1;
        let id = self.next_job;
        let config = self.engine.config().clone();
        let seed = req.seed.unwrap_or(config.seed);
        let job = Job {
            id,
            scenario: req.scenario,
            seed,
            status: JobStatus::Running,
            submitted_version: self.engine.version(),
            applied: false,
            report: None,
            result: None,
            error: None,
        };
        self.jobs.insert(id, Arc::new(job));

        let dataset = self.engine.dataset();
        let inbox = self.inbox.clone();
        tokio::spawn(async move {
            let run = tokio::task::spawn_blocking(move || {
                run_scenario(&dataset, scenario, &config, seed)
            });
            let outcome = match run.await {
                Ok(Ok(result)) => Ok(result),
                Ok(Err(e)) => Err(e.to_string()),
                Err(e) => Err(format!("optimization task failed: {e}")),
            };
            if let Some(tx) = inbox.upgrade() {
                let _ = tx.send(Command::FinishJob { id, outcome }).await;
            }
        });
        Ok(JobAccepted {
            version: self.engine.version(),
            job_id: id,
            status: JobStatus::Running,
        })
    }

    fn finish_job(&mut self, id: u64, outcome: Result<ScenarioResult, String>) {
        let Some(job) = self.jobs.get(&id) else {
            return;
        };
        let mut job = Job::clone(job);
        match outcome {
            Ok(result) => {
                let planned = matches!(result.scenario, Scenario::ZScoreSeg | Scenario::Ips);
                // a run started from an older state would undo later commits
                if planned && job.submitted_version == self.engine.version() {
                    self.engine
                        .adopt(result.yard.clone(), result.schedule.clone());
                    job.applied = true;
                }
                job.report = Some(render_text(&result));
                job.result = Some(result);
                job.status = JobStatus::Done;
            }
            Err(e) => {
                job.error = Some(e);
                job.status = JobStatus::Failed;
            }
        }
        self.jobs.insert(id, Arc::new(job));
    }
}

/// Starts the writer task on the current runtime.
pub fn spawn(engine: Engine) -> AppState {
    let (tx, mut rx) = mpsc::channel::<Command>(64);
    let initial = Arc::new(Snapshot {
        engine: engine.clone(),
        jobs: BTreeMap::new(),
    });
    let (publish, snapshots) = watch::channel(initial);
    let mut writer = Writer {
        engine,
        jobs: BTreeMap::new(),
        next_job: 0,
        publish,
        inbox: tx.downgrade(),
    };
    tokio::spawn(async move {
        while let Some(cmd) = rx.recv().await {
            writer.handle(cmd);
            writer.publish();
        }
    });
    AppState {
        commands: tx,
        snapshots,
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/yard", get(get_yard))
        .route("/schedule", get(get_schedule))
        .route("/metrics", get(get_metrics))
        .route("/histogram", get(get_histogram))
        .route("/jobs/{id}", get(get_job))
        .route("/containers", post(post_container))
        .route("/appointments", post(post_appointment))
        .route("/optimize", post(post_optimize))
        .route("/rebalance", post(post_rebalance))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends. The bound address is
/// written to `log`.
pub async fn serve(engine: Engine, addr: SocketAddr, log: &mut dyn Write) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    writeln!(log, "listening on http://{}", listener.local_addr()?)?;
    log.flush()?;
    axum::serve(listener, router(spawn(engine))).await
}

fn bad_body(state: &AppState, rejection: JsonRejection) -> ApiError {
    ApiError {
        status: StatusCode::BAD_REQUEST,
        message: rejection.body_text(),
        version: state.snapshot().engine.version(),
    }
}

async fn get_yard(State(state): State<AppState>) -> Json<YardView> {
    Json(state.snapshot().engine.yard_view())
}

async fn get_schedule(State(state): State<AppState>) -> Json<ScheduleView> {
    Json(state.snapshot().engine.schedule_view())
}

async fn get_histogram(State(state): State<AppState>) -> Json<HistogramView> {
    Json(state.snapshot().engine.histogram_view())
}

async fn get_metrics(State(state): State<AppState>) -> Result<Json<MetricsView>, ApiError> {
    let snapshot = state.snapshot();
    let version = snapshot.engine.version();
    let view = tokio::task::spawn_blocking(move || {
        let engine = &snapshot.engine;
        let live = engine.live_metrics();
        let config = engine.config();
        match run_ladder(&engine.dataset(), config, config.seed) {
            Ok(results) => {
                let (report, note) = match MetricsReport::from_ladder(&results) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                MetricsView {
                    version,
                    live,
                    ladder: results
                        .iter()
                        .map(|r| LadderRow {
                            scenario: r.scenario.number(),
                            pt: r.pt,
                            m: r.m,
                            seed: r.seed,
                            rehandles: r.rehandles,
                        })
                        .collect(),
                    report,
                    note,
                }
            }
            Err(e) => MetricsView {
                version,
                live,
                ladder: Vec::new(),
                report: None,
                note: Some(e.to_string()),
            },
        }
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
        version,
    })?;
    Ok(Json(view))
}

async fn get_job(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<JobView>, ApiError> {
    let snapshot = state.snapshot();
    let version = snapshot.engine.version();
    let job = id
        .parse::<u64>()
        .ok()
        .and_then(|id| snapshot.jobs.get(&id))
        .ok_or_else(|| ApiError {
            status: StatusCode::NOT_FOUND,
            message: format!("unknown job {id}"),
            version,
        })?;
    Ok(Json(JobView {
        version,
        job: Job::clone(job),
    }))
}

async fn post_container(
    State(state): State<AppState>,
    body: Result<Json<ContainerInput>, JsonRejection>,
) -> Result<(StatusCode, Json<AddedContainer>), ApiError> {
    let Json(input) = body.map_err(|r| bad_body(&state, r))?;
    let added = state.ask(|tx| Command::AddContainer(input, tx)).await??;
    Ok((StatusCode::CREATED, Json(added)))
}

async fn post_appointment(
    State(state): State<AppState>,
    body: Result<Json<AppointmentRequest>, JsonRejection>,
) -> Result<Json<BookingOutcome>, ApiError> {
    let Json(req) = body.map_err(|r| bad_body(&state, r))?;
    let outcome = state.ask(|tx| Command::Book(req, tx)).await??;
    Ok(Json(outcome))
}

async fn post_optimize(
    State(state): State<AppState>,
    body: Result<Json<OptimizeRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<JobAccepted>), ApiError> {
    let Json(req) = body.map_err(|r| bad_body(&state, r))?;
    let accepted = state.ask(|tx| Command::StartJob(req, tx)).await??;
    Ok((StatusCode::ACCEPTED, Json(accepted)))
}

async fn post_rebalance(State(state): State<AppState>) -> Result<Json<RebalanceOutcome>, ApiError> {
    let outcome = state.ask(Command::Rebalance).await?;
    Ok(Json(outcome))
}
