//! HTTP facade for the expert review loop: the review queue, decisions on
//! its items, the versioned ontology, and enrichment and extraction runs.
//!
//! Reads are served from a snapshot refreshed after every write. Decisions
//! and pipeline runs go through one writer lock, so a decision sent while a
//! run is in progress waits for the run to finish.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use contron::dke::extract_domain_knowledge;
use contron::eval::{compute_metrics, score_pairs};
use contron::ie::{read_annotations, write_annotations, write_pairs, Annotation, Extractor, PairRecord};
use contron::io::{to_pretty_json, write_atomic};
use contron::oe::enrich_ontology;
use contron::oe::review::{ReviewAction, ReviewError, ReviewItem, ReviewQueue};
use contron::ontology::store::{now_timestamp, ChangeRecord, OntologyStore};
use contron::ontology::Ontology;
use log::{error, info};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::{watch, Mutex, OwnedMutexGuard};

pub use config::{KbSource, Pipeline, PipelineConfig, CONFIG_FILE};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] contron::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Enrich,
    Extract,
}

impl RunKind {
    fn as_str(self) -> &'static str {
        match self {
            RunKind::Enrich => "enrich",
            RunKind::Extract => "extract",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub run_id: String,
    pub kind: RunKind,
    pub state: RunState,
    pub started_at: String,
    #[serde(default)]
    pub finished_at: Option<String>,
    #[serde(default)]
    pub summary: Option<Value>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStatus {
    pub current: Option<RunInfo>,
    pub last: Option<RunInfo>,
}

struct Writer {
    store: OntologyStore,
    queue: ReviewQueue,
}

struct Snapshot {
    ontology: Ontology,
    history: Vec<ChangeRecord>,
    items: Vec<ReviewItem>,
}

impl Snapshot {
    fn of(w: &Writer) -> Self {
        Snapshot {
            ontology: w.store.current().clone(),
            history: w.store.history().to_vec(),
            items: w.queue.items().to_vec(),
        }
    }
}

pub struct AppState {
    pipeline: Pipeline,
    data_dir: PathBuf,
    writer: Arc<Mutex<Writer>>,
    snapshot: RwLock<Arc<Snapshot>>,
    status: watch::Sender<PipelineStatus>,
    token: Option<String>,
}

pub type SharedState = Arc<AppState>;

/// Highest run number among the files in `runs`.
fn last_run_number(runs: &Path) -> u64 {
    fs::read_dir(runs)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let stem = name.split('.').next()?;
            stem.rsplit('-').next()?.parse().ok()
        })
        .max()
        .unwrap_or(0)
}

impl AppState {
    /// Opens or initializes the stores under `data_dir`. With a token set,
    /// every request must carry `Authorization: Bearer <token>`.
    pub fn open(data_dir: &Path, pipeline: Pipeline, token: Option<String>) -> Result<SharedState, ServiceError> {
        let store = OntologyStore::open_or_create(&data_dir.join("ontology"), || Ok(pipeline.seed.clone()))?;
        let queue = ReviewQueue::open(&data_dir.join("queue"))?;
        let writer = Writer { store, queue };
        let snapshot = RwLock::new(Arc::new(Snapshot::of(&writer)));
        let last = last_run_number(&data_dir.join("runs"));
        info!("data directory {} (last run {last})", data_dir.display());
        Ok(Arc::new(AppState {
            pipeline,
            data_dir: data_dir.to_owned(),
            writer: Arc::new(Mutex::new(writer)),
            snapshot,
            status: watch::Sender::new(PipelineStatus::default()),
            token,
        }))
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    fn refresh(&self, w: &Writer) {
        *self.snapshot.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(Snapshot::of(w));
    }

    pub fn status(&self) -> PipelineStatus {
        self.status.borrow().clone()
    }

    /// Resolves once no pipeline run is in flight.
    pub async fn wait_idle(&self) {
        let mut rx = self.status.subscribe();
        let _ = rx.wait_for(|s| s.current.is_none()).await;
    }

    fn runs_dir(&self) -> PathBuf {
        self.data_dir.join("runs")
    }

    fn annotations_path(&self, doc_id: &str) -> PathBuf {
        self.data_dir.join("annotations").join(format!("{doc_id}.json"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let status = match &e {
            ReviewError::NotFound(_) => StatusCode::NOT_FOUND,
            ReviewError::AlreadyResolved(_) => StatusCode::CONFLICT,
            ReviewError::Invalid(_) => StatusCode::BAD_REQUEST,
            ReviewError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/queue", get(get_queue))
        .route("/api/queue/{item_id}/decision", post(post_decision))
        .route("/api/ontology", get(get_ontology))
        .route("/api/ontology/history", get(get_history))
        .route("/api/pipeline/enrich", post(post_enrich))
        .route("/api/pipeline/extract", post(post_extract))
        .route("/api/pipeline/status", get(get_status))
        .route("/api/documents/{doc_id}/annotations", get(get_annotations))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: SharedState) -> std::io::Result<()> {
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn require_token(State(state): State<SharedState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "missing or wrong token").into_response();
        }
    }
    next.run(req).await
}

/// Open items, best candidate first. Candidates the class has since been
/// declared disjoint from are left out.
async fn get_queue(State(state): State<SharedState>) -> Json<Vec<ReviewItem>> {
    let snap = state.snapshot();
    let mut items: Vec<ReviewItem> = snap
        .items
        .iter()
        .filter(|i| !i.resolved)
        .cloned()
        .map(|mut i| {
            if let Some(class) = snap.ontology.class(&i.class_id) {
                i.candidates.retain(|c| !class.is_disjoint(&c.entity.entity_id));
            }
            i
        })
        .collect();
    items.sort_by(|a, b| {
        b.best_similarity()
            .total_cmp(&a.best_similarity())
            .then_with(|| a.item_id.cmp(&b.item_id))
    });
    Json(items)
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    #[serde(flatten)]
    action: ReviewAction,
    #[serde(default)]
    actor: Option<String>,
}

#[derive(Debug, Serialize)]
struct DecisionResponse {
    item: ReviewItem,
    replayed: bool,
    version: u64,
}

async fn post_decision(
    State(state): State<SharedState>,
    UrlPath(item_id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<DecisionResponse>, ApiError> {
    let body: DecisionBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid decision body: {e}")))?;
    let actor = body.actor.unwrap_or_else(|| "expert".into());
    let guard = state.writer.clone().lock_owned().await;
    let task_state = state.clone();
    let result = tokio::task::spawn_blocking(move || {
        let mut guard = guard;
        let Writer { store, queue } = &mut *guard;
        let resolution = queue.resolve(&item_id, body.action, &actor, store);
        let version = store.current().version;
        task_state.refresh(&guard);
        resolution.map(|r| DecisionResponse {
            item: r.item,
            replayed: r.replayed,
            version,
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(result?))
}

async fn get_ontology(State(state): State<SharedState>) -> Json<Ontology> {
    Json(state.snapshot().ontology.clone())
}

async fn get_history(State(state): State<SharedState>) -> Json<Vec<ChangeRecord>> {
    Json(state.snapshot().history.clone())
}

async fn get_status(State(state): State<SharedState>) -> Json<PipelineStatus> {
    Json(state.status())
}

async fn post_enrich(State(state): State<SharedState>) -> Result<impl IntoResponse, ApiError> {
    start_run(state, RunKind::Enrich)
}

async fn post_extract(State(state): State<SharedState>) -> Result<impl IntoResponse, ApiError> {
    start_run(state, RunKind::Extract)
}

/// Starts a run in the background, or refuses with 409 while another one
/// is in flight.
fn start_run(state: SharedState, kind: RunKind) -> Result<(StatusCode, Json<RunInfo>), ApiError> {
    let mut started = None;
    state.status.send_if_modified(|s| {
        if s.current.is_some() {
            return false;
        }
        let n = last_run_number(&state.runs_dir()).max(
            s.last
                .as_ref()
                .and_then(|r| r.run_id.rsplit('-').next()?.parse().ok())
                .unwrap_or(0),
        ) + 1;
        let info = RunInfo {
            run_id: format!("{}-{n:04}", kind.as_str()),
            kind,
            state: RunState::Running,
            started_at: now_timestamp(),
            finished_at: None,
            summary: None,
            error: None,
        };
        s.current = Some(info.clone());
        started = Some(info);
        true
    });
    let Some(info) = started else {
        return Err(ApiError::new(StatusCode::CONFLICT, "a pipeline run is already in flight"));
    };
    let run = info.clone();
    tokio::spawn(async move {
        let guard = state.writer.clone().lock_owned().await;
        let task_state = state.clone();
        let run_id = run.run_id.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let mut guard = guard;
            let result = execute(&task_state, kind, &run_id, &mut guard);
            task_state.refresh(&guard);
            result
        })
        .await;
        let mut done = run;
        done.finished_at = Some(now_timestamp());
        match outcome {
            Ok(Ok(summary)) => {
                info!("{} finished: {summary}", done.run_id);
                done.state = RunState::Succeeded;
                done.summary = Some(summary);
            }
            Ok(Err(e)) => {
                error!("{} failed: {e}", done.run_id);
                done.state = RunState::Failed;
                done.error = Some(e.to_string());
            }
            Err(e) => {
                error!("{} panicked: {e}", done.run_id);
                done.state = RunState::Failed;
                done.error = Some(e.to_string());
            }
        }
        state.status.send_modify(|s| {
            s.current = None;
            s.last = Some(done);
        });
    });
    Ok((StatusCode::ACCEPTED, Json(info)))
}

fn execute(
    state: &AppState,
    kind: RunKind,
    run_id: &str,
    writer: &mut OwnedMutexGuard<Writer>,
) -> Result<Value, contron::Error> {
    let p = &state.pipeline;
    let runs = state.runs_dir();
    let Writer { store, queue } = &mut **writer;
    match kind {
        RunKind::Enrich => {
            let concepts = extract_domain_knowledge(&p.docs, &p.lexicon, &p.dke)?;
            let run = enrich_ontology(store.current(), &concepts, p.kb.as_ref(), Some(&p.lexicon), &p.oe)?;
            let version = store.commit_all(&run.mutations, Some("oe"))?;
            let queued = queue.enqueue(&run.ledger)?;
            run.ledger.write(&runs.join(format!("{run_id}.json")))?;
            Ok(json!({
                "decisions": run.ledger.histogram(),
                "queued": queued.len(),
                "version": version,
                "concepts": concepts.len(),
            }))
        }
        RunKind::Extract => {
            let ex = Extractor::new(p.extract);
            let mut records: Vec<PairRecord> = Vec::new();
            for doc in &p.docs {
                let out = ex.extract_information(store.current(), doc);
                write_annotations(&state.annotations_path(&doc.doc_id), &doc.doc_id, &out.annotations)?;
                records.extend(out.pairs.iter().map(PairRecord::from));
            }
            write_pairs(&runs.join(format!("{run_id}.tsv")), &records)?;
            let mut summary = json!({
                "pairs": records.len(),
                "documents": p.docs.len(),
                "version": store.current().version,
            });
            if let Some(gold) = &p.gold {
                let counts = score_pairs(&records, gold);
                summary["counts"] = json!({"tp": counts.tp, "fp": counts.fp, "fn": counts.fn_});
                if let Ok(m) = compute_metrics(counts, 1.0) {
                    summary["metrics"] = json!(m);
                }
            }
            write_atomic(&runs.join(format!("{run_id}.json")), &to_pretty_json(&summary)?)?;
            Ok(summary)
        }
    }
}

#[derive(Debug, Serialize)]
struct AnnotatedDocument {
    doc_id: String,
    text: String,
    annotations: Vec<Annotation>,
}

/// Document text with the annotations of the latest extraction run; the
/// list is empty before the first run.
async fn get_annotations(
    State(state): State<SharedState>,
    UrlPath(doc_id): UrlPath<String>,
) -> Result<Json<AnnotatedDocument>, ApiError> {
    let doc = state
        .pipeline
        .docs
        .iter()
        .find(|d| d.doc_id == doc_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown document {doc_id}")))?;
    let path = state.annotations_path(&doc.doc_id);
    let annotations = if path.exists() {
        read_annotations(&path).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    } else {
        Vec::new()
    };
    Ok(Json(AnnotatedDocument {
        doc_id: doc.doc_id.clone(),
        text: doc.text.clone(),
        annotations,
    }))
}
