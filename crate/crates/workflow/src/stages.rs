//! Pipeline stages over a loaded project. Each stage that rewrites the model
//! in bulk ends with a journal checkpoint; single edits are journaled as
//! edits.

use std::path::{Component as PathPart, Path, PathBuf};
use std::str::FromStr;

use workbench_core::store::sha256_hex;
use workbench_core::{DocFormat, Project, RefinementEdit, Uid};
use workbench_docpipe::{extract_all, ingest_document, ExtractorAdapter, Lexicon, LiveEndpoint, ReplayLog};
use workbench_geom::parse_step;
use workbench_synth::{apply_edit, SynthesisSummary, VerbTable};
use workbench_verify::{
    parse_constraint_file, run_full_verification, ConstraintSpec, GeometrySource, VerificationReport, VerifyPolicy,
};

use crate::error::WorkflowError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdapterChoice {
    Baseline,
    Replay,
    Live,
}

impl FromStr for AdapterChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(AdapterChoice::Baseline),
            "replay" => Ok(AdapterChoice::Replay),
            "live" => Ok(AdapterChoice::Live),
            _ => Err(format!("unknown adapter `{s}` (expected baseline, replay or live)")),
        }
    }
}

/// Builds the extractor. Replay needs a log; live reads its endpoint from the
/// environment and appends each exchange to `log` when one is given.
pub fn make_adapter(choice: AdapterChoice, log: Option<&Path>) -> Result<ExtractorAdapter, WorkflowError> {
    Ok(match choice {
        AdapterChoice::Baseline => ExtractorAdapter::Baseline,
        AdapterChoice::Replay => {
            let path = log.ok_or_else(|| WorkflowError::Usage("the replay adapter needs a replay log".into()))?;
            ExtractorAdapter::Replay(ReplayLog::load(path)?)
        }
        AdapterChoice::Live => {
            let mut ep = LiveEndpoint::from_env()?;
            ep.record_to = log.map(Path::to_path_buf);
            ExtractorAdapter::Live(ep)
        }
    })
}

/// Markdown for `.md`/`.markdown`, plain text otherwise.
pub fn format_for(path: &Path) -> DocFormat {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("md" | "markdown") => DocFormat::Markdown,
        _ => DocFormat::PlainText,
    }
}

pub fn ingest_bytes(project: &mut Project, title: &str, raw: &[u8], format: DocFormat) -> Result<Uid, WorkflowError> {
    let mut model = project.model.clone();
    let uid = ingest_document(&mut model, title, raw, format)?;
    project.model = model;
    project.checkpoint("ingest");
    Ok(uid)
}

/// Ingests a file under its file name.
pub fn ingest_file(project: &mut Project, path: &Path, format: Option<DocFormat>) -> Result<Uid, WorkflowError> {
    let raw = std::fs::read(path).map_err(|e| WorkflowError::io(path, e))?;
    let title = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    ingest_bytes(project, &title, &raw, format.unwrap_or_else(|| format_for(path)))
}

pub fn extract(project: &mut Project, adapter: &ExtractorAdapter) -> Result<Vec<Uid>, WorkflowError> {
    let mut model = project.model.clone();
    let created = extract_all(&mut model, adapter)?;
    project.model = model;
    project.checkpoint("extract");
    Ok(created)
}

pub fn synthesize(project: &mut Project) -> Result<SynthesisSummary, WorkflowError> {
    let mut model = project.model.clone();
    let summary = workbench_synth::synthesize(&mut model, &Lexicon::default(), &VerbTable::default())?;
    project.model = model;
    project.checkpoint("synthesize");
    Ok(summary)
}

pub fn edit(project: &mut Project, edit: RefinementEdit) -> Result<(), WorkflowError> {
    Ok(apply_edit(project, edit)?)
}

/// `path` relative to `base` when it lies below it, with `/` separators;
/// otherwise the absolute path.
pub fn relative_path(path: &Path, base: &Path) -> Result<String, WorkflowError> {
    let abs = path.canonicalize().map_err(|e| WorkflowError::io(path, e))?;
    let base = base.canonicalize().map_err(|e| WorkflowError::io(base, e))?;
    Ok(match abs.strip_prefix(&base) {
        Ok(rel) => rel
            .components()
            .filter_map(|c| match c {
                PathPart::Normal(s) => Some(s.to_string_lossy().into_owned()),
                _ => None,
            })
            .collect::<Vec<_>>()
            .join("/"),
        Err(_) => abs.display().to_string(),
    })
}

/// Registers a STEP file, stored relative to `project_dir`. Registering the
/// same path again refreshes its digest and product list and keeps the uid.
pub fn register_geometry(project: &mut Project, file: &Path, project_dir: &Path) -> Result<Uid, WorkflowError> {
    let bytes = std::fs::read(file).map_err(|e| WorkflowError::io(file, e))?;
    let step = parse_step(&bytes).map_err(|source| WorkflowError::Step {
        path: file.to_path_buf(),
        source,
    })?;
    let rel = relative_path(file, project_dir)?;
    let digest = sha256_hex(&bytes);
    let products: Vec<String> = step.products.iter().map(|p| p.name.clone()).collect();
    let model = &mut project.model;
    let uid = match model.geometry.values_mut().find(|g| g.path == rel) {
        Some(g) => {
            if g.digest == digest && g.products == products {
                return Ok(g.uid.clone());
            }
            g.digest = digest;
            g.products = products;
            g.uid.clone()
        }
        None => model.add_geometry(&rel, &digest, products)?,
    };
    project.checkpoint("geometry");
    Ok(uid)
}

pub fn load_constraints(path: &Path) -> Result<Vec<ConstraintSpec>, WorkflowError> {
    let src = std::fs::read_to_string(path).map_err(|e| WorkflowError::io(path, e))?;
    parse_constraint_file(&src).map_err(|(line, source)| WorkflowError::Constraint {
        path: path.to_path_buf(),
        line,
        source,
    })
}

pub fn load_policy(path: &Path) -> Result<VerifyPolicy, WorkflowError> {
    read_json(path)
}

/// Full verification with geometry paths resolved against `project_dir`.
pub fn verify(
    project: &Project,
    project_dir: &Path,
    extra: &[ConstraintSpec],
    policy: &VerifyPolicy,
) -> VerificationReport {
    let geometry = GeometrySource::load(&project.model, project_dir);
    run_full_verification(&project.model, &geometry, extra, policy)
}

/// Reads a JSON file, reporting schema errors with their JSON pointer.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, WorkflowError> {
    let text = std::fs::read_to_string(path).map_err(|e| WorkflowError::io(path, e))?;
    parse_json(&text).map_err(|(pointer, message)| WorkflowError::Json {
        path: format!("{}{}", path.display(), pointer),
        message,
    })
}

/// `Err((pointer, message))` on failure; the pointer is empty for syntax errors.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, (String, String)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." {
            String::new()
        } else {
            format!(" at {path}")
        };
        (pointer, e.into_inner().to_string())
    })
}

/// Directory holding the project file.
pub fn project_dir(project_path: &Path) -> PathBuf {
    match project_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
