use std::path::PathBuf;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;
use workbench_core::store::{load_project, save_project};
use workbench_core::{Direction, Project, TraceKind};
use workbench_service::{open, router, ServiceConfig, REVISION_HEADER};
use workbench_synth::graph_to_dsm;
use workbench_verify::VerifyPolicy;
use workbench_workflow as wf;

const DOCS: [&str; 4] = ["mission.md", "avionics.md", "power.txt", "notes.txt"];
const BOUNDARY: &str = "workbench-test-boundary";

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/cubesat")
}

struct Fixture {
    _dir: tempfile::TempDir,
    path: PathBuf,
    app: Router,
}

fn start(project: Project, dir: tempfile::TempDir) -> Fixture {
    let path = dir.path().join("sat.thread.json");
    save_project(&project, &path, false).unwrap();
    let config = ServiceConfig {
        project: path.clone(),
        policy: VerifyPolicy::default(),
        replay_log: Some(fixtures().join("replay.jsonl")),
        cors_origins: vec!["http://localhost:5173".into()],
    };
    let app = router(open(&config).unwrap(), &config.cors_origins);
    Fixture { _dir: dir, path, app }
}

fn empty() -> Fixture {
    start(Project::new(), tempfile::tempdir().unwrap())
}

/// Synthesized and merged project with design data and geometry next to it.
fn designed() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixtures();
    for f in ["cubesat.step", "design.json"] {
        std::fs::copy(fx.join(f), dir.path().join(f)).unwrap();
    }
    let mut p = Project::new();
    for d in DOCS {
        wf::ingest_file(&mut p, &fx.join("docs").join(d), None).unwrap();
    }
    wf::extract(&mut p, &wf::make_adapter(wf::AdapterChoice::Baseline, None).unwrap()).unwrap();
    wf::synthesize(&mut p).unwrap();
    wf::edit(&mut p, wf::read_json(&fx.join("merge.edit.json")).unwrap()).unwrap();
    let sheet = wf::DesignSheet::load(&dir.path().join("design.json")).unwrap();
    wf::apply_design(&mut p, &sheet, dir.path(), dir.path()).unwrap();
    start(p, dir)
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Value,
}

impl Reply {
    fn revision(&self) -> u64 {
        self.headers[REVISION_HEADER].to_str().unwrap().parse().unwrap()
    }
}

async fn send(app: &Router, req: Request<Body>) -> Reply {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let body = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(&bytes)))
    };
    Reply { status, headers, body }
}

async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, uri: &str, body: Value, if_match: Option<&str>) -> Reply {
    let mut req = Request::post(uri).header(header::CONTENT_TYPE, "application/json");
    if let Some(r) = if_match {
        req = req.header(header::IF_MATCH, r);
    }
    send(app, req.body(Body::from(body.to_string())).unwrap()).await
}

fn multipart(files: &[(&str, Vec<u8>)]) -> Body {
    let mut out = Vec::new();
    for (name, bytes) in files {
        out.extend_from_slice(
            format!(
                "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{name}\"\r\nContent-Type: text/plain\r\n\r\n"
            )
            .as_bytes(),
        );
        out.extend_from_slice(bytes);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Body::from(out)
}

async fn upload_docs(app: &Router) -> Reply {
    let files: Vec<(&str, Vec<u8>)> = DOCS
        .iter()
        .map(|d| (*d, std::fs::read(fixtures().join("docs").join(d)).unwrap()))
        .collect();
    let req = Request::post("/api/documents")
        .header(
            header::CONTENT_TYPE,
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(multipart(&files))
        .unwrap();
    send(app, req).await
}

#[tokio::test]
async fn pipeline_over_http_matches_the_library() {
    let fx = empty();
    let app = &fx.app;

    let r = upload_docs(app).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["revision"], 1);
    assert_eq!(r.body["result"], json!(["doc-0", "doc-1", "doc-2", "doc-3"]));
    assert_eq!(r.headers[header::CONTENT_TYPE], "application/json; charset=utf-8");

    let r = post(app, "/api/extract", json!({"adapter": "replay"}), Some("1")).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.revision(), 2);
    assert!(r.body["result"].as_array().unwrap().len() >= 20);

    let r = post(app, "/api/synthesize", json!({}), None).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["result"]["components"], 10);

    // library view of the saved file
    let saved = load_project(&fx.path).unwrap();
    let r = get(app, "/api/dsm").await;
    assert_eq!(
        r.body,
        serde_json::to_value(graph_to_dsm(&saved.model, None).unwrap()).unwrap()
    );
    let r = get(app, "/api/project").await;
    let (bytes, _) = workbench_core::store::encode_project(&saved);
    assert_eq!(r.body, serde_json::from_slice::<Value>(&bytes).unwrap());
    assert_eq!(r.revision(), 3);

    let kinds = [TraceKind::Satisfies, TraceKind::DerivedFrom].into_iter().collect();
    let want = saved
        .model
        .impact_set(&"req-0".parse().unwrap(), &kinds, Direction::Backward)
        .unwrap();
    let r = get(
        app,
        "/api/impact?start=req-0&kinds=satisfies,derived-from&direction=backward",
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body, serde_json::to_value(&want).unwrap());
    assert!(!want.is_empty());

    // the same journal as the library pipeline
    assert_eq!(saved.journal.len(), 6);
}

#[tokio::test]
async fn stale_revision_is_rejected_with_the_current_one() {
    let fx = designed();
    let app = &fx.app;
    let rename = json!({"op": "RenameComponent", "payload": {"uid": "cmp-3", "name": "Transceiver"}});
    let r = post(app, "/api/edits", rename, Some("\"0\"")).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["revision"], 1);
    assert_eq!(r.body["result"]["author"], "api");

    let again = json!({"op": "RenameComponent", "payload": {"uid": "cmp-3", "name": "Radio"}});
    let r = post(app, "/api/edits", again.clone(), Some("0")).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["revision"], 1);
    assert_eq!(r.revision(), 1);
    // nothing was applied or saved
    let saved = load_project(&fx.path).unwrap();
    assert_eq!(saved.model.components[&"cmp-3".parse().unwrap()].name, "Transceiver");

    let r = post(app, "/api/edits", again, Some("1")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.revision(), 2);
    let saved = load_project(&fx.path).unwrap();
    assert_eq!(saved.model.components[&"cmp-3".parse().unwrap()].name, "Radio");
    assert_eq!(saved, {
        let mut q = saved.clone();
        q.model = workbench_synth::replay_journal(&saved.journal).unwrap();
        q
    });
}

#[tokio::test]
async fn requirement_review_is_journaled() {
    let fx = designed();
    let app = &fx.app;
    let before = load_project(&fx.path).unwrap().journal.len();

    let r = get(app, "/api/requirements/req-0").await;
    assert_eq!(r.body["status"], "Proposed");
    let req = Request::patch("/api/requirements/req-0")
        .body(Body::from(r#"{"status": "accepted", "author": "reviewer"}"#))
        .unwrap();
    let r = send(app, req).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["result"]["status"], "Accepted");
    assert_eq!(get(app, "/api/requirements/req-0").await.body, r.body["result"]);

    let req = Request::patch("/api/requirements/req-1")
        .body(Body::from(
            r#"{"text": "The camera shall be bolted to the structure."}"#,
        ))
        .unwrap();
    let r = send(app, req).await;
    assert_eq!(r.body["result"]["status"], "Modified");

    let saved = load_project(&fx.path).unwrap();
    assert_eq!(saved.journal.len(), before + 2);

    // rejected: empty text, unknown requirement, bad uid, unknown field
    for (uri, body, status) in [
        (
            "/api/requirements/req-1",
            r#"{"text": " "}"#,
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            "/api/requirements/req-999",
            r#"{"status": "accepted"}"#,
            StatusCode::NOT_FOUND,
        ),
        (
            "/api/requirements/bogus",
            r#"{"status": "accepted"}"#,
            StatusCode::BAD_REQUEST,
        ),
        (
            "/api/requirements/req-1",
            r#"{"colour": "red"}"#,
            StatusCode::BAD_REQUEST,
        ),
        (
            "/api/requirements/req-1",
            r#"{"status": "proposed"}"#,
            StatusCode::BAD_REQUEST,
        ),
    ] {
        let r = send(app, Request::patch(uri).body(Body::from(body)).unwrap()).await;
        assert_eq!(r.status, status, "{uri} {body}: {}", r.body);
        assert!(r.body["error"].is_string());
    }
    assert_eq!(load_project(&fx.path).unwrap().journal.len(), before + 2);
}

#[tokio::test]
async fn verify_matches_library_and_is_kept_as_latest() {
    let fx = designed();
    let app = &fx.app;
    assert_eq!(get(app, "/api/reports/latest").await.status, StatusCode::NOT_FOUND);

    let r = post(app, "/api/verify", json!({}), None).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let saved = load_project(&fx.path).unwrap();
    let lib = wf::verify(&saved, fx.path.parent().unwrap(), &[], &VerifyPolicy::default());
    let report: workbench_verify::VerificationReport = serde_json::from_value(r.body.clone()).unwrap();
    assert_eq!(report.digest(), lib.digest());
    assert_eq!(r.headers["x-report-digest"], lib.digest().as_str());
    assert_eq!(report.errors(), 0);
    assert_eq!(get(app, "/api/reports/latest").await.body, r.body);

    let r = post(
        app,
        "/api/verify",
        json!({"constraints": ["sum(*, mass) <= 1 kg"]}),
        None,
    )
    .await;
    assert_eq!(r.body["summary"]["Phase2Constraint/Error"], 1, "{}", r.body["summary"]);
    // verification is not a mutation
    assert_eq!(r.revision(), 0);

    let r = post(app, "/api/verify", json!({"constraints": ["sum(*, mass) <="]}), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn geometry_boxes_for_components_and_files() {
    let fx = designed();
    let app = &fx.app;
    let r = get(app, "/api/geometry/cmp-0/aabb").await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body["min"], json!([30.0, 30.0, 72.0]));
    assert_eq!(r.body["max"], json!([70.0, 70.0, 110.0]));
    assert_eq!(r.body["axis"], json!([0.0, 0.0, 1.0]));

    let saved = load_project(&fx.path).unwrap();
    let geo = saved.model.geometry.keys().next().unwrap().to_string();
    let r = get(app, &format!("/api/geometry/{geo}/aabb")).await;
    assert_eq!(r.body["path"], "cubesat.step");
    let products = r.body["products"].as_array().unwrap();
    assert_eq!(products.len(), 10);
    let root = products.iter().find(|p| p["name"] == "CubeSat").unwrap();
    assert_eq!(root["max"], json!([101.5, 100.0, 115.0]));

    // the merged-away processing unit has no payload
    assert_eq!(get(app, "/api/geometry/cmp-1/aabb").await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(app, "/api/geometry/req-0/aabb").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cors_and_bad_requests() {
    let fx = empty();
    let app = &fx.app;
    let req = Request::options("/api/dsm")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(
        resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN],
        "http://localhost:5173"
    );

    let r = post(app, "/api/extract", json!({"adapter": "oracle"}), None).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post(
        app,
        "/api/edits",
        json!({"op": "SetCell", "payload": {"row": "cmp-0"}}),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST, "{}", r.body);
    let r = post(
        app,
        "/api/edits",
        json!({"op": "RemoveComponent", "payload": {"uid": "cmp-0"}}),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND, "{}", r.body);
    let r = post(app, "/api/extract", json!({}), Some("seven")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = get(app, "/api/impact?start=doc-0").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    // nothing above was accepted
    assert_eq!(get(app, "/api/project").await.revision(), 0);
}
