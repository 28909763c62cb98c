//! The application API behind the dashboard.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dialogforge_core::generator::{ConversationGraph, DialogActMap, Ontology};
use dialogforge_core::remediator::{enumerate_paths, history_rows, ReportDocument, DEFAULT_MAX_PATHS};
use dialogforge_core::schema::UtteranceSidecar;
use dialogforge_core::text::stable_hash;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::{Mutex, Semaphore};

use crate::artifacts::{self as names, pretty, ArtifactDir};
use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::pipeline::{self, ParseInput};
use crate::store::{JobStatus, SessionEntry, Stage, Store};

/// Simulation jobs allowed to run at once across all sessions.
pub const DEFAULT_JOB_WORKERS: usize = 2;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: Store,
    data_dir: PathBuf,
    defaults: PipelineConfig,
    /// Serializes session creation and per-session writes.
    write_lock: Mutex<()>,
    workers: Semaphore,
}

impl AppState {
    /// `data_dir` holds one artifact directory per session.
    pub fn new(store: Store, data_dir: PathBuf, defaults: PipelineConfig, job_workers: usize) -> Self {
        Self {
            inner: Arc::new(Inner {
                store,
                data_dir,
                defaults,
                write_lock: Mutex::new(()),
                workers: Semaphore::new(job_workers.max(1)),
            }),
        }
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    fn dir(&self, session_id: &str) -> ArtifactDir {
        ArtifactDir::new(self.inner.data_dir.join(session_id))
    }
}

struct ApiError(PipelineError);

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &PipelineError) -> StatusCode {
    match e {
        PipelineError::InvalidInput(_)
        | PipelineError::Validation(_)
        | PipelineError::InvalidConfig(_)
        | PipelineError::Generator(_) => StatusCode::UNPROCESSABLE_ENTITY,
        PipelineError::OutputExists(_)
        | PipelineError::MissingArtifact(_)
        | PipelineError::UnrevisedMap(_)
        | PipelineError::StageOrder { .. }
        | PipelineError::JobRunning
        | PipelineError::Conflict(_) => StatusCode::CONFLICT,
        PipelineError::NotFound(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(self.0.to_json())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], bytes).into_response()
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, PipelineError> {
    serde_json::from_slice(body).map_err(|e| PipelineError::InvalidInput(e.to_string()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, PipelineError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| PipelineError::Internal(format!("worker panicked: {e}")))?
        .map_err(ApiError)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    name: Option<String>,
    definition: serde_json::Value,
    #[serde(default)]
    utterances: Option<UtteranceSidecar>,
    #[serde(default)]
    eval_utterances: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    config: Option<PipelineConfig>,
}

fn artifact_paths(dir: &ArtifactDir, kinds: &[(&'static str, &str)]) -> Vec<(&'static str, String)> {
    kinds.iter().map(|(k, rel)| (*k, dir.path(rel).display().to_string())).collect()
}

async fn create_session(State(st): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let config = req.config.unwrap_or_else(|| st.inner.defaults.clone());
    config.validate()?;
    let _guard = st.inner.write_lock.lock().await;
    let id = st.store().next_session_id()?;
    let dir = st.dir(&id);
    let definition = serde_json::to_vec(&req.definition).expect("value serializes");
    let cfg = config.clone();
    let d = dir.clone();
    let summary = blocking(move || {
        let input = ParseInput { definition: &definition, utterances: req.utterances, eval_utterances: req.eval_utterances };
        let res = pipeline::parse(&input, &d, true, &cfg);
        if res.is_err() {
            let _ = std::fs::remove_dir_all(d.root());
        }
        res
    })
    .await?;
    let name = req.name.unwrap_or_else(|| summary.bot.clone());
    let arts = artifact_paths(&dir, &[("maps", names::MAPS_DIR), ("ontology", names::ONTOLOGY), ("graph", names::GRAPH)]);
    let entry = st.store().create_session(&id, &name, &config, &arts)?;
    Ok((StatusCode::CREATED, Json(entry)).into_response())
}

async fn list_sessions(State(st): State<AppState>) -> ApiResult<Json<Vec<SessionEntry>>> {
    Ok(Json(st.store().list_sessions()?))
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionEntry>> {
    Ok(Json(st.store().session(&id)?))
}

fn maps_document(dir: &ArtifactDir) -> Result<(Vec<u8>, String), PipelineError> {
    let maps = dir.read_maps()?;
    let bytes = pretty(&maps);
    let etag = format!("\"{:016x}\"", stable_hash(&[&String::from_utf8_lossy(&bytes)]));
    Ok((bytes, etag))
}

async fn get_maps(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    st.store().session(&id)?;
    let (bytes, etag) = maps_document(&st.dir(&id))?;
    let mut resp = json_bytes(StatusCode::OK, bytes);
    resp.headers_mut().insert(header::ETAG, HeaderValue::from_str(&etag).expect("ascii etag"));
    Ok(resp)
}

/// Map and ontology edits are only accepted before goals exist.
fn require_editable(entry: &SessionEntry) -> Result<(), PipelineError> {
    if entry.stage > Stage::Revised {
        return Err(PipelineError::StageOrder { stage: "revise".into(), needs: "a session before goal generation".into() });
    }
    Ok(())
}

async fn put_maps(
    State(st): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let maps: BTreeMap<String, DialogActMap> = parse_body(&body)?;
    let _guard = st.inner.write_lock.lock().await;
    let entry = st.store().session(&id)?;
    require_editable(&entry)?;
    let dir = st.dir(&id);
    let (_, current) = maps_document(&dir)?;
    if let Some(want) = headers.get(header::IF_MATCH) {
        let want = want.to_str().unwrap_or_default();
        if want != "*" && want != current {
            return Err(PipelineError::Conflict(format!("maps changed since {want}; current version is {current}")).into());
        }
    }
    pipeline::replace_maps(&dir, &maps)?;
    if maps.values().all(|m| m.revised) {
        st.store().advance(&id, Stage::Revised, &[])?;
    } else {
        st.store().touch(&id)?;
    }
    let (bytes, etag) = maps_document(&dir)?;
    let mut resp = json_bytes(StatusCode::OK, bytes);
    resp.headers_mut().insert(header::ETAG, HeaderValue::from_str(&etag).expect("ascii etag"));
    Ok(resp)
}

async fn put_ontology(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let ontology: Ontology = parse_body(&body)?;
    let _guard = st.inner.write_lock.lock().await;
    let entry = st.store().session(&id)?;
    require_editable(&entry)?;
    let dir = st.dir(&id);
    pipeline::replace_ontology(&dir, &ontology)?;
    st.store().touch(&id)?;
    Ok(json_bytes(StatusCode::OK, dir.read_bytes(names::ONTOLOGY)?))
}

async fn post_goals(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let _guard = st.inner.write_lock.lock().await;
    let entry = st.store().session(&id)?;
    if entry.stage > Stage::GoalsReady {
        return Err(PipelineError::StageOrder { stage: "goals".into(), needs: "a session not yet simulated".into() }.into());
    }
    let dir = st.dir(&id);
    let cfg = entry.config.clone();
    let d = dir.clone();
    let summary = blocking(move || pipeline::generate(&d, &cfg)).await?;
    let mut arts = artifact_paths(&dir, &[("goals", names::GOALS)]);
    if dir.exists(names::PARAPHRASES) {
        arts.extend(artifact_paths(&dir, &[("paraphrases", names::PARAPHRASES)]));
    }
    st.store().advance(&id, Stage::GoalsReady, &arts)?;
    Ok((StatusCode::OK, Json(summary)).into_response())
}

async fn post_simulate(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = st.store().session(&id)?;
    match entry.stage {
        s if s < Stage::GoalsReady => {
            return Err(PipelineError::StageOrder { stage: "simulate".into(), needs: "goals_ready".into() }.into())
        }
        Stage::GoalsReady => {}
        _ => return Err(PipelineError::Conflict(format!("session {id} has already been simulated")).into()),
    }
    let job = st.store().enqueue_job(&id)?;
    let job_id = job.job_id.clone();
    let st2 = st.clone();
    tokio::spawn(async move { run_job(st2, id, job_id, entry.config).await });
    Ok((StatusCode::ACCEPTED, Json(job)).into_response())
}

async fn run_job(st: AppState, id: String, job_id: String, config: PipelineConfig) {
    let _permit = st.inner.workers.acquire().await.expect("semaphore open");
    let store = st.store();
    if let Err(e) = store.set_job_status(&id, &job_id, JobStatus::Running, None) {
        log::error!("job {id}/{job_id}: {e}");
        return;
    }
    let dir = st.dir(&id);
    let (d, sid, cfg) = (dir.clone(), id.clone(), config.clone());
    let st2 = st.clone();
    let result = blocking(move || {
        pipeline::simulate(&d, &cfg)?;
        let mut arts = artifact_paths(&d, &[("episodes", names::EPISODES)]);
        if d.exists(names::INJECTIONS) {
            arts.extend(artifact_paths(&d, &[("injections", names::INJECTIONS)]));
        }
        st2.store().advance(&sid, Stage::Simulated, &arts)?;
        let report = pipeline::remediate_stage(&d, &sid, &[], &cfg)?;
        st2.store().record_metrics(&report.history_point())?;
        st2.store().advance(&sid, Stage::Remediated, &artifact_paths(&d, &[("report", names::REPORT)]))?;
        Ok(())
    })
    .await;
    let (status, err) = match result {
        Ok(()) => (JobStatus::Done, None),
        Err(ApiError(e)) => {
            log::warn!("job {id}/{job_id} failed: {e}");
            (JobStatus::Failed, Some(e.to_string()))
        }
    };
    if let Err(e) = store.set_job_status(&id, &job_id, status, err.as_deref()) {
        log::error!("job {id}/{job_id}: {e}");
    }
}

async fn get_job(State(st): State<AppState>, Path((id, job)): Path<(String, String)>) -> ApiResult<Response> {
    Ok(Json(st.store().job(&id, &job)?).into_response())
}

async fn get_report(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = st.store().session(&id)?;
    if entry.stage < Stage::Remediated {
        return Err(PipelineError::StageOrder { stage: "report".into(), needs: "remediated".into() }.into());
    }
    let mut doc: ReportDocument = st.dir(&id).read_json(names::REPORT)?;
    // Every session recorded up to and including this one.
    let all = st.store().history(None)?;
    let upto = all.iter().position(|p| p.session_id == id).map(|i| i + 1).unwrap_or(all.len());
    doc.history = history_rows(&all[..upto]);
    Ok(json_bytes(StatusCode::OK, doc.to_json_pretty().into_bytes()))
}

async fn get_episode(State(st): State<AppState>, Path((id, episode)): Path<(String, String)>) -> ApiResult<Response> {
    st.store().session(&id)?;
    let dir = st.dir(&id);
    let eps = blocking(move || dir.read_episodes()).await?;
    let e = eps
        .into_iter()
        .find(|e| e.goal_id == episode)
        .ok_or_else(|| PipelineError::NotFound(format!("episode {episode}")))?;
    Ok(Json(e).into_response())
}

#[derive(Deserialize)]
struct PathQuery {
    source: String,
    target: String,
    #[serde(default)]
    max_length: Option<usize>,
}

async fn get_paths(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PathQuery>,
) -> ApiResult<Response> {
    st.store().session(&id)?;
    let graph: ConversationGraph = st.dir(&id).read_json(names::GRAPH)?;
    let paths = enumerate_paths(&graph, &q.source, &q.target, q.max_length, DEFAULT_MAX_PATHS)
        .map_err(|e| PipelineError::InvalidInput(e.to_string()))?;
    Ok(Json(paths).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/dialog-act-maps", get(get_maps).put(put_maps))
        .route("/api/sessions/{id}/ontology", axum::routing::put(put_ontology))
        .route("/api/sessions/{id}/goals", post(post_goals))
        .route("/api/sessions/{id}/simulate", post(post_simulate))
        .route("/api/sessions/{id}/jobs/{job}", get(get_job))
        .route("/api/sessions/{id}/report", get(get_report))
        .route("/api/sessions/{id}/episodes/{episode}", get(get_episode))
        .route("/api/sessions/{id}/paths", get(get_paths))
        .with_state(state)
}
