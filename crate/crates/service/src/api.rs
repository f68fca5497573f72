use std::collections::BTreeMap;
use std::path::Component;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use memelabel_core::dataset::{render_labels, LabelRecord, MemeRecord, Split};
use memelabel_core::labels::labels_disagree;
use memelabel_core::metrics::{agreement_matrix, AgreementOptions, LabelLevel, LabelVector};
use memelabel_core::{CoarseLabel, FineLabel, HateLabel};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::state::AppState;
use crate::store::{annotator_of, source_name, DEFAULT_ANNOTATOR};

type Shared = Arc<AppState>;

pub const ANNOTATOR_HEADER: &str = "x-annotator-id";
const DEFAULT_PAGE_SIZE: usize = 50;
const MAX_PAGE_SIZE: usize = 500;

/// An error response: `{"error": message}`.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::NOT_FOUND, msg.into())
    }

    fn unprocessable(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.into())
    }

    fn internal(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Builds the router. `cors_origins` empty allows any origin.
pub fn router(state: Shared, cors_origins: &[String]) -> Router {
    let origins = if cors_origins.is_empty() {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(cors_origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::HeaderName::from_static(ANNOTATOR_HEADER)]);
    Router::new()
        .route("/api/memes", get(list_memes))
        .route("/api/memes/{id}", get(meme_detail))
        .route("/api/memes/{id}/image", get(meme_image))
        .route("/api/memes/{id}/label", post(submit_label))
        .route("/api/disagreements", get(disagreements))
        .route("/api/progress", get(progress))
        .route("/api/reports/agreement", get(agreement_report))
        .route("/api/guidelines", get(guidelines))
        .route("/api/export", get(export))
        .layer(cors)
        .with_state(state)
}

fn annotator(headers: &HeaderMap) -> ApiResult<String> {
    let Some(raw) = headers.get(ANNOTATOR_HEADER) else {
        return Ok(DEFAULT_ANNOTATOR.to_string());
    };
    let value = raw.to_str().map_err(|_| ApiError::bad_request("X-Annotator-Id must be ASCII"))?.trim();
    let valid =
        !value.is_empty() && value.len() <= 64 && value.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if !valid {
        return Err(ApiError::bad_request("X-Annotator-Id must be 1-64 characters from [A-Za-z0-9._-]"));
    }
    Ok(value.to_string())
}

#[derive(Debug, Serialize)]
struct LabelView {
    source: String,
    coarse: CoarseLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    fine: Option<FineLabel>,
}

impl LabelView {
    fn new(source: impl Into<String>, label: HateLabel) -> Self {
        LabelView { source: source.into(), coarse: label.coarse(), fine: label.fine() }
    }
}

fn image_url(meme: &MemeRecord) -> String {
    format!("/api/memes/{}/image", meme.id)
}

#[derive(Debug, Deserialize)]
struct ListQuery {
    split: Option<String>,
    status: Option<String>,
    page: Option<String>,
    page_size: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    All,
    Labeled,
    Unlabeled,
    Disagreement,
}

fn parse_number(name: &str, raw: Option<&str>, default: usize) -> ApiResult<usize> {
    match raw {
        None | Some("") => Ok(default),
        Some(s) => {
            s.parse().map_err(|_| ApiError::bad_request(format!("`{name}` must be a positive integer, got `{s}`")))
        }
    }
}

async fn list_memes(
    State(state): State<Shared>,
    headers: HeaderMap,
    Query(q): Query<ListQuery>,
) -> ApiResult<Json<Value>> {
    let who = annotator(&headers)?;
    let split = match q.split.as_deref() {
        None | Some("") | Some("all") => None,
        Some(s) => Some(s.parse::<Split>().map_err(ApiError::bad_request)?),
    };
    let status = match q.status.as_deref() {
        None | Some("") | Some("all") => Status::All,
        Some("labeled") => Status::Labeled,
        Some("unlabeled") => Status::Unlabeled,
        Some("disagreement") => Status::Disagreement,
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "unknown status `{other}` (expected all, labeled, unlabeled or disagreement)"
            )))
        }
    };
    let page = parse_number("page", q.page.as_deref(), 1)?;
    let page_size = parse_number("page_size", q.page_size.as_deref(), DEFAULT_PAGE_SIZE)?;
    if page == 0 || page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ApiError::bad_request(format!("page must be >= 1 and page_size in 1..={MAX_PAGE_SIZE}")));
    }

    let matching: Vec<&MemeRecord> = state
        .memes
        .iter()
        .filter(|m| split.is_none() || m.split == split)
        .filter(|m| match status {
            Status::All => true,
            Status::Labeled => state.store.get(&m.id, &who).is_some(),
            Status::Unlabeled => state.store.get(&m.id, &who).is_none(),
            Status::Disagreement => disagree(&state, &m.id),
        })
        .collect();
    let items: Vec<Value> = matching
        .iter()
        .skip((page - 1) * page_size)
        .take(page_size)
        .map(|m| {
            json!({
                "id": m.id,
                "split": m.split,
                "propaganda": m.propaganda,
                "text": m.text,
                "image_url": image_url(m),
                "labeled": state.store.get(&m.id, &who).is_some(),
            })
        })
        .collect();
    Ok(Json(json!({
        "items": items,
        "page": page,
        "page_size": page_size,
        "total": matching.len(),
    })))
}

/// Disagreement is judged on the annotator agents' labels only.
fn disagree(state: &AppState, id: &str) -> bool {
    let labels: Vec<HateLabel> = state.agent_labels(id).into_iter().map(|(_, l)| l).collect();
    labels_disagree(&labels)
}

#[derive(Debug, Deserialize)]
struct DetailQuery {
    reveal: Option<String>,
}

async fn meme_detail(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(q): Query<DetailQuery>,
) -> ApiResult<Json<Value>> {
    let who = annotator(&headers)?;
    let meme = state.meme(&id).ok_or_else(|| ApiError::not_found(format!("no meme `{id}`")))?;
    let reveal = match q.reveal.as_deref() {
        None | Some("") | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(other) => return Err(ApiError::bad_request(format!("`reveal` must be true or false, got `{other}`"))),
    };
    let mine = state.store.get(&id, &who).map(|h| LabelView::new(source_name(&who), h.label));
    let mut body = json!({
        "id": meme.id,
        "split": meme.split,
        "propaganda": meme.propaganda,
        "text": meme.text,
        "image_url": image_url(meme),
        "annotator": who,
        "my_label": mine,
        "revealed": reveal,
    });
    if reveal {
        let agents: Vec<LabelView> = state.agent_labels(&id).into_iter().map(|(s, l)| LabelView::new(s, l)).collect();
        let humans: Vec<LabelView> = state
            .store
            .for_meme(&id)
            .into_iter()
            .filter(|h| h.annotator != who)
            .map(|h| LabelView::new(source_name(&h.annotator), h.label))
            .collect();
        body["agent_labels"] = json!(agents);
        body["consolidated"] = json!(state.consolidated(&id).map(|l| LabelView::new("consolidated", l)));
        body["other_human_labels"] = json!(humans);
    }
    Ok(Json(body))
}

fn content_type_for(path: &str) -> &'static str {
    let ext = path.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase()).unwrap_or_default();
    match ext.as_str() {
        "jpg" | "jpeg" => "image/jpeg",
        "png" => "image/png",
        "gif" => "image/gif",
        "webp" => "image/webp",
        _ => "application/octet-stream",
    }
}

async fn meme_image(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let meme = state.meme(&id).ok_or_else(|| ApiError::not_found(format!("no meme `{id}`")))?;
    let rel = std::path::Path::new(&meme.image_path);
    if rel.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(ApiError::not_found("image path escapes the manifest root"));
    }
    let bytes = tokio::fs::read(state.image_root.join(rel))
        .await
        .map_err(|_| ApiError::not_found(format!("image for `{id}` is missing")))?;
    Ok(([(header::CONTENT_TYPE, content_type_for(&meme.image_path))], bytes).into_response())
}

#[derive(Debug, Deserialize)]
struct LabelBody {
    coarse: Value,
    #[serde(default)]
    fine: Option<Value>,
}

async fn submit_label(
    State(state): State<Shared>,
    headers: HeaderMap,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let who = annotator(&headers)?;
    if state.meme(&id).is_none() {
        return Err(ApiError::not_found(format!("no meme `{id}`")));
    }
    let value: Value =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("body is not JSON: {e}")))?;
    let parsed: LabelBody = serde_json::from_value(value)
        .map_err(|e| ApiError::unprocessable(format!("expected {{\"coarse\", \"fine\"?}}: {e}")))?;
    let coarse = parsed.coarse.as_str().ok_or_else(|| ApiError::unprocessable("`coarse` must be a string"))?;
    let fine = match &parsed.fine {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.as_str()),
        Some(_) => return Err(ApiError::unprocessable("`fine` must be a string or null")),
    };
    let label = HateLabel::parse(coarse, fine).map_err(|e| ApiError::unprocessable(e.to_string()))?;

    let store_state = state.clone();
    let (id2, who2) = (id.clone(), who.clone());
    let saved = tokio::task::spawn_blocking(move || store_state.store.put(&id2, &who2, label))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({
        "id": saved.id,
        "annotator": saved.annotator,
        "source": source_name(&saved.annotator),
        "coarse": saved.label.coarse(),
        "fine": saved.label.fine(),
        "at": saved.at,
    })))
}

async fn disagreements(State(state): State<Shared>) -> Json<Value> {
    let items: Vec<Value> = state
        .memes
        .iter()
        .filter(|m| disagree(&state, &m.id))
        .map(|m| {
            let labels: Vec<LabelView> =
                state.all_labels(&m.id).into_iter().map(|(s, l)| LabelView::new(s, l)).collect();
            json!({"id": m.id, "split": m.split, "labels": labels})
        })
        .collect();
    Json(json!({"total": items.len(), "items": items}))
}

async fn progress(State(state): State<Shared>, headers: HeaderMap) -> ApiResult<Json<Value>> {
    let who = annotator(&headers)?;
    let mut by_split: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut labeled = 0;
    for m in &state.memes {
        let key = m.split.map(|s| s.as_str()).unwrap_or("unassigned").to_string();
        let slot = by_split.entry(key).or_default();
        slot.0 += 1;
        if state.store.get(&m.id, &who).is_some() {
            slot.1 += 1;
            labeled += 1;
        }
    }
    let mut annotators: BTreeMap<String, usize> = BTreeMap::new();
    for h in state.store.all() {
        if state.meme(&h.id).is_some() {
            *annotators.entry(source_name(&h.annotator)).or_default() += 1;
        }
    }
    let by_split: BTreeMap<String, Value> =
        by_split.into_iter().map(|(k, (total, done))| (k, json!({"total": total, "labeled": done}))).collect();
    Ok(Json(json!({
        "annotator": who,
        "total": state.memes.len(),
        "labeled": labeled,
        "remaining": state.memes.len() - labeled,
        "by_split": by_split,
        "by_source": annotators,
    })))
}

#[derive(Debug, Deserialize)]
struct AgreementQuery {
    level: Option<String>,
}

/// Label records for every source: each annotator, the consolidator and
/// every human annotator, in manifest order.
fn source_records(state: &AppState) -> Vec<(String, Vec<LabelRecord>)> {
    let mut sources: Vec<(String, Vec<LabelRecord>)> = Vec::new();
    for agent in state.agent_sources() {
        let records = state
            .memes
            .iter()
            .filter_map(|m| {
                state
                    .agent_labels(&m.id)
                    .into_iter()
                    .find(|(s, _)| *s == agent)
                    .map(|(_, l)| LabelRecord::new(m.id.clone(), l, agent.clone()))
            })
            .collect();
        sources.push((agent, records));
    }
    if state.run.is_some() {
        let records = state
            .memes
            .iter()
            .filter_map(|m| state.consolidated(&m.id).map(|l| LabelRecord::new(m.id.clone(), l, "consolidated")))
            .collect();
        sources.push(("consolidated".into(), records));
    }
    let ids = state.ids();
    for who in state.store.annotators() {
        sources.push((source_name(&who), state.store.export(&who, &ids)));
    }
    sources
}

async fn agreement_report(State(state): State<Shared>, Query(q): Query<AgreementQuery>) -> ApiResult<Json<Value>> {
    let level: LabelLevel = match q.level.as_deref() {
        None | Some("") => LabelLevel::Coarse,
        Some(s) => s.parse().map_err(|e: String| ApiError::bad_request(e))?,
    };
    let mut vectors = Vec::new();
    let mut skipped = BTreeMap::new();
    for (name, records) in source_records(&state) {
        let (vector, n_skipped) =
            LabelVector::from_labels(&records, level).map_err(|e| ApiError::internal(e.to_string()))?;
        if vector.is_empty() {
            continue;
        }
        skipped.insert(name.clone(), n_skipped);
        vectors.push((name, vector));
    }
    let mut opts = AgreementOptions::new(level.as_str());
    let agents: Vec<String> =
        state.agent_sources().into_iter().filter(|a| vectors.iter().any(|(n, _)| n == a)).collect();
    opts.multi_rater = (agents.len() >= 3).then_some(agents);
    let report = agreement_matrix(&vectors, &opts).map_err(|e| ApiError::internal(e.to_string()))?;
    let mut body = serde_json::to_value(&report).expect("report serializes");
    body["skipped_without_level"] = json!(skipped);
    body["degenerate"] = json!(report.degenerate());
    Ok(Json(body))
}

async fn guidelines() -> Json<Value> {
    let coarse: Vec<Value> = CoarseLabel::ALL
        .iter()
        .map(|&c| {
            let fine: Vec<Value> = c
                .family()
                .iter()
                .map(|f| json!({"label": f.as_str(), "title": f.title(), "definition": f.definition()}))
                .collect();
            json!({"label": c.as_str(), "title": c.title(), "definition": c.definition(), "fine": fine})
        })
        .collect();
    Json(json!({"labels": coarse}))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    source: Option<String>,
}

async fn export(State(state): State<Shared>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let source = q.source.as_deref().unwrap_or(DEFAULT_ANNOTATOR);
    let records = if let Some(who) = annotator_of(source) {
        state.store.export(who, &state.ids())
    } else {
        source_records(&state)
            .into_iter()
            .find(|(name, _)| name == source)
            .map(|(_, r)| r)
            .ok_or_else(|| ApiError::bad_request(format!("unknown label source `{source}`")))?
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], render_labels(&records)).into_response())
}
