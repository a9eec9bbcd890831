use std::collections::BTreeSet;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;
use workbench_core::store::encode_project;
use workbench_core::{Direction, EditOp, HubError, RefinementEdit, StoreError, TraceKind, Uid};
use workbench_geom::{compute_aabb, Aabb};
use workbench_synth::{graph_to_dsm, SynthError};
use workbench_verify::{parse_constraint, GeometrySource};
use workbench_workflow::{self as wf, AdapterChoice, WorkflowError};

use crate::session::{MutateError, Session};

pub type Shared = Arc<RwLock<Session>>;

const JSON_UTF8: &str = "application/json; charset=utf-8";
pub const REVISION_HEADER: &str = "x-revision";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    revision: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            revision: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.message});
        if let Some(r) = self.revision {
            body["revision"] = r.into();
        }
        json_response(self.status, &body, self.revision)
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let status = match &e {
            WorkflowError::Io { .. } | WorkflowError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
            WorkflowError::Synth(SynthError::UnknownComponent(_) | SynthError::UnknownRequirement(_)) => {
                StatusCode::NOT_FOUND
            }
            WorkflowError::Usage(_) | WorkflowError::Json { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl<E: Into<WorkflowError>> From<MutateError<E>> for ApiError {
    fn from(e: MutateError<E>) -> Self {
        match e {
            MutateError::Op(e) => ApiError::from(Into::<WorkflowError>::into(e)),
            MutateError::Store(e @ StoreError::IntegrityRefused(_)) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
            }
            MutateError::Store(e) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

type ApiResult = Result<Response, ApiError>;

fn json_response(status: StatusCode, body: &impl Serialize, revision: Option<u64>) -> Response {
    let bytes = serde_json::to_vec(body).expect("serializable response");
    let mut resp = (status, bytes).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static(JSON_UTF8));
    if let Some(r) = revision {
        h.insert(REVISION_HEADER, HeaderValue::from(r));
        h.insert(header::ETAG, HeaderValue::from_str(&format!("\"{r}\"")).expect("ascii"));
    }
    resp
}

fn ok(body: &impl Serialize, revision: u64) -> ApiResult {
    Ok(json_response(StatusCode::OK, body, Some(revision)))
}

/// Body of every accepted mutation.
fn mutated(revision: u64, result: impl Serialize) -> ApiResult {
    Ok(json_response(
        StatusCode::OK,
        &json!({"revision": revision, "result": result}),
        Some(revision),
    ))
}

/// `If-Match` must name the current revision when present. Quotes and a
/// weak-tag prefix are accepted.
fn check_revision(headers: &HeaderMap, current: u64) -> Result<(), ApiError> {
    let Some(v) = headers.get(header::IF_MATCH) else {
        return Ok(());
    };
    let raw = v.to_str().unwrap_or("").trim();
    let raw = raw.strip_prefix("W/").unwrap_or(raw).trim_matches('"');
    let asked: u64 = raw
        .parse()
        .map_err(|_| ApiError::bad_request(format!("If-Match `{raw}` is not a revision")))?;
    if asked != current {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            message: format!("revision {asked} is stale; current revision is {current}"),
            revision: Some(current),
        });
    }
    Ok(())
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let text = if text.trim().is_empty() { "{}" } else { text };
    wf::parse_json(text).map_err(|(ptr, msg)| ApiError::bad_request(format!("invalid body{ptr}: {msg}")))
}

fn parse_uid(s: &str) -> Result<Uid, ApiError> {
    s.parse().map_err(|e: HubError| ApiError::bad_request(e.to_string()))
}

fn now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64)
}

pub async fn get_project(State(s): State<Shared>) -> ApiResult {
    let s = s.read().await;
    let (bytes, _) = encode_project(&s.project);
    let value: Value = serde_json::from_slice(&bytes).expect("store output is JSON");
    ok(&value, s.revision)
}

pub async fn post_documents(State(s): State<Shared>, headers: HeaderMap, mut form: Multipart) -> ApiResult {
    let mut files = Vec::new();
    let mut format = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.to_string()))?
    {
        match field.name() {
            Some("format") => {
                let text = field.text().await.map_err(|e| ApiError::bad_request(e.to_string()))?;
                format = Some(text.parse().map_err(ApiError::bad_request)?);
            }
            Some("file") => {
                let name = field
                    .file_name()
                    .map(str::to_string)
                    .ok_or_else(|| ApiError::bad_request("file part without a file name"))?;
                let bytes = field.bytes().await.map_err(|e| ApiError::bad_request(e.to_string()))?;
                files.push((name, bytes));
            }
            other => return Err(ApiError::bad_request(format!("unexpected form field {other:?}"))),
        }
    }
    if files.is_empty() {
        return Err(ApiError::bad_request("no file parts"));
    }
    let mut s = s.write().await;
    check_revision(&headers, s.revision)?;
    let (rev, uids) = s.mutate(|p| {
        files
            .iter()
            .map(|(name, bytes)| {
                let f = format.unwrap_or_else(|| wf::format_for(std::path::Path::new(name)));
                wf::ingest_bytes(p, name, bytes, f)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    mutated(rev, uids)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractBody {
    #[serde(default = "baseline")]
    adapter: String,
}

fn baseline() -> String {
    "baseline".into()
}

pub async fn post_extract(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let req: ExtractBody = parse_body(&body)?;
    let choice: AdapterChoice = req.adapter.parse().map_err(ApiError::bad_request)?;
    let mut s = s.write().await;
    check_revision(&headers, s.revision)?;
    let adapter = wf::make_adapter(choice, s.replay_log.as_deref())?;
    let (rev, uids) = s.mutate(|p| wf::extract(p, &adapter))?;
    mutated(rev, uids)
}

pub async fn get_requirement(State(s): State<Shared>, Path(uid): Path<String>) -> ApiResult {
    let uid = parse_uid(&uid)?;
    let s = s.read().await;
    let r = s
        .project
        .model
        .requirements
        .get(&uid)
        .ok_or_else(|| ApiError::not_found(format!("{uid} is not a requirement")))?;
    ok(r, s.revision)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RequirementPatch {
    status: Option<String>,
    text: Option<String>,
    author: Option<String>,
}

pub async fn patch_requirement(
    State(s): State<Shared>,
    Path(uid): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let uid = parse_uid(&uid)?;
    let patch: RequirementPatch = parse_body(&body)?;
    let mut ops = Vec::new();
    if let Some(text) = patch.text {
        ops.push(EditOp::EditRequirementText { uid: uid.clone(), text });
    }
    match patch.status.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None => {}
        Some("accepted") => ops.push(EditOp::AcceptRequirement { uid: uid.clone() }),
        Some("rejected") => ops.push(EditOp::RejectRequirement { uid: uid.clone() }),
        Some(other) => {
            return Err(ApiError::bad_request(format!(
                "status `{other}` cannot be set directly"
            )))
        }
    }
    if ops.is_empty() {
        return Err(ApiError::bad_request("nothing to change"));
    }
    let author = patch.author.unwrap_or_else(|| "api".into());
    let mut s = s.write().await;
    check_revision(&headers, s.revision)?;
    let ts = now();
    let (rev, ()) = s.mutate(|p| {
        ops.into_iter()
            .try_for_each(|op| wf::edit(p, RefinementEdit::new(op, author.clone(), ts)))
    })?;
    let r = s.project.model.requirements[&uid].clone();
    mutated(rev, r)
}

pub async fn post_synthesize(State(s): State<Shared>, headers: HeaderMap) -> ApiResult {
    let mut s = s.write().await;
    check_revision(&headers, s.revision)?;
    let (rev, summary) = s.mutate(wf::synthesize)?;
    mutated(rev, summary)
}

pub async fn get_dsm(State(s): State<Shared>) -> ApiResult {
    let s = s.read().await;
    let dsm = graph_to_dsm(&s.project.model, None).map_err(|e| ApiError::from(WorkflowError::from(e)))?;
    ok(&dsm, s.revision)
}

/// A refinement edit whose author and timestamp may be left to the server.
#[derive(Deserialize)]
struct EditBody {
    #[serde(flatten)]
    op: EditOp,
    author: Option<String>,
    timestamp: Option<i64>,
}

pub async fn post_edits(State(s): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let e: EditBody = parse_body(&body)?;
    let mut s = s.write().await;
    check_revision(&headers, s.revision)?;
    let edit = RefinementEdit::new(
        e.op,
        e.author.unwrap_or_else(|| "api".into()),
        e.timestamp.unwrap_or_else(now),
    );
    let (rev, ()) = s.mutate(|p| wf::edit(p, edit.clone()))?;
    mutated(rev, edit)
}

#[derive(Deserialize)]
pub struct ImpactQuery {
    start: String,
    kinds: Option<String>,
    direction: Option<String>,
}

/// Trace kinds from a comma-separated list; every kind when absent.
pub fn parse_kinds(csv: Option<&str>) -> Result<BTreeSet<TraceKind>, String> {
    match csv {
        None => Ok(TraceKind::ALL.into_iter().collect()),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(str::parse)
            .collect(),
    }
}

pub async fn get_impact(State(s): State<Shared>, Query(q): Query<ImpactQuery>) -> ApiResult {
    let start = parse_uid(&q.start)?;
    let kinds = parse_kinds(q.kinds.as_deref()).map_err(ApiError::bad_request)?;
    let direction: Direction = q
        .direction
        .as_deref()
        .unwrap_or("forward")
        .parse()
        .map_err(ApiError::bad_request)?;
    let s = s.read().await;
    let set = s
        .project
        .model
        .impact_set(&start, &kinds, direction)
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    ok(&set, s.revision)
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct VerifyBody {
    constraints: Vec<String>,
}

pub async fn post_verify(State(s): State<Shared>, body: Bytes) -> ApiResult {
    let req: VerifyBody = parse_body(&body)?;
    let extra = req
        .constraints
        .iter()
        .map(|t| parse_constraint(t).map_err(|e| ApiError::bad_request(format!("`{t}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = s.write().await;
    let report = wf::verify(&s.project, &s.dir(), &extra, &s.policy);
    let mut resp = json_response(StatusCode::OK, &report, Some(s.revision));
    resp.headers_mut().insert(
        "x-report-digest",
        HeaderValue::from_str(&report.digest()).expect("hex digest"),
    );
    s.latest_report = Some(report);
    Ok(resp)
}

pub async fn get_latest_report(State(s): State<Shared>) -> ApiResult {
    let s = s.read().await;
    let r = s
        .latest_report
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no verification has run yet"))?;
    ok(r, s.revision)
}

fn box_json(b: &Aabb) -> Value {
    match (b.min(), b.max()) {
        (Some(lo), Some(hi)) => json!({"min": [lo.x, lo.y, lo.z], "max": [hi.x, hi.y, hi.z]}),
        _ => json!({"min": null, "max": null}),
    }
}

/// Placed box of a component, or the world box of every product of a
/// registered geometry file.
pub async fn get_aabb(State(s): State<Shared>, Path(uid): Path<String>) -> ApiResult {
    let uid = parse_uid(&uid)?;
    let s = s.read().await;
    let model = &s.project.model;
    let body = if model.components.contains_key(&uid) {
        let src = GeometrySource::load(model, &s.dir());
        let part = src
            .place(model, &uid)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{uid}: {e}")))?;
        let mut v = box_json(&part.aabb);
        v["uid"] = json!(uid);
        v["axis"] = json!(part.axis.map(|a| [a.x, a.y, a.z]));
        v
    } else if let Some(g) = model.geometry.get(&uid) {
        let path = s.dir().join(&g.path);
        let bytes = std::fs::read(&path)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{}: {e}", g.path)))?;
        let step = workbench_geom::parse_step(&bytes)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("{}: {e}", g.path)))?;
        let mut products = Vec::new();
        for p in &step.products {
            let world = step
                .world_transform(p.id)
                .and_then(|t| Ok(compute_aabb(&step, p.id, true)?.transform(&t)))
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
            let mut v = box_json(&world);
            v["name"] = json!(p.name);
            products.push(v);
        }
        json!({"uid": uid, "path": g.path, "products": products})
    } else {
        return Err(ApiError::not_found(format!(
            "{uid} is neither a component nor a geometry file"
        )));
    };
    ok(&body, s.revision)
}
