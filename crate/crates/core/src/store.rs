//! Project persistence.
//!
//! A project is one canonical JSON document: keys sorted lexicographically,
//! decimals written as strings with their unit, two-space indentation and a
//! trailing newline. Saves go through a temp file in the target directory and
//! an atomic rename.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::StoreError;
use crate::journal::Journal;
use crate::project::{Edges, Model, Project};

pub const SCHEMA_VERSION: u64 = 1;
pub const FILE_EXTENSION: &str = ".thread.json";

/// Recursively rebuilds every object with sorted keys.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Canonical bytes of any serializable value.
pub fn canonical_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let value = canonicalize(serde_json::to_value(value).expect("model serializes"));
    let mut out = serde_json::to_vec_pretty(&value).expect("value serializes");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn model_digest(model: &Model) -> String {
    sha256_hex(&canonical_bytes(model))
}

#[derive(Serialize, Deserialize)]
struct ProjectFile {
    version: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    digest: Option<String>,
    uids: crate::uid::UidRegistry,
    bindings: Value,
    components: Value,
    requirements: Value,
    documents: Value,
    geometry: Value,
    edges: Edges,
    constraints: Value,
    state_machines: Value,
    journal: Journal,
}

fn to_document(project: &Project) -> Value {
    let model = serde_json::to_value(&project.model).expect("model serializes");
    let Value::Object(mut map) = model else {
        unreachable!("model serializes to an object")
    };
    map.insert("version".into(), Value::from(SCHEMA_VERSION));
    map.insert(
        "journal".into(),
        serde_json::to_value(&project.journal).expect("journal serializes"),
    );
    canonicalize(Value::Object(map))
}

/// Canonical file bytes and digest for a project.
pub fn encode_project(project: &Project) -> (Vec<u8>, String) {
    let mut doc = to_document(project);
    let digest = sha256_hex(&canonical_bytes(&doc));
    doc.as_object_mut()
        .expect("object")
        .insert("digest".into(), Value::String(digest.clone()));
    (canonical_bytes(&doc), digest)
}

pub fn save_project(project: &Project, path: &Path, force: bool) -> Result<String, StoreError> {
    if !force {
        let report = project.model.validate_integrity();
        if !report.is_clean() {
            return Err(StoreError::IntegrityRefused(report.summary()));
        }
    }
    let (bytes, digest) = encode_project(project);
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(&bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(digest)
}

fn pointer_from_path(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

fn schema<T, E: std::fmt::Display>(pointer: &str) -> impl FnOnce(E) -> Result<T, StoreError> + '_ {
    move |e| {
        Err(StoreError::Schema {
            pointer: pointer.to_string(),
            message: e.to_string(),
        })
    }
}

pub fn decode_project(bytes: &[u8]) -> Result<Project, StoreError> {
    let value: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(e) => return schema("")(e),
    };
    let version = match value.get("version") {
        Some(v) => v.as_u64().ok_or_else(|| StoreError::Schema {
            pointer: "/version".into(),
            message: "expected an unsigned integer".into(),
        })?,
        None => {
            return Err(StoreError::Schema {
                pointer: "/version".into(),
                message: "missing field".into(),
            })
        }
    };
    if version != SCHEMA_VERSION {
        return Err(StoreError::UnknownVersion(version));
    }
    let stored_digest = value.get("digest").and_then(Value::as_str).map(str::to_string);

    let mut without_digest = value.clone();
    if let Some(map) = without_digest.as_object_mut() {
        map.remove("digest");
    }

    let file: ProjectFile = match serde_path_to_error::deserialize(&value) {
        Ok(f) => f,
        Err(e) => {
            let pointer = pointer_from_path(e.path());
            return Err(StoreError::Schema {
                pointer,
                message: e.into_inner().to_string(),
            });
        }
    };
    let mut model_value = without_digest;
    if let Some(map) = model_value.as_object_mut() {
        map.remove("version");
        map.remove("journal");
    }
    let model: Model = match serde_path_to_error::deserialize(&model_value) {
        Ok(m) => m,
        Err(e) => {
            let pointer = pointer_from_path(e.path());
            return Err(StoreError::Schema {
                pointer,
                message: e.into_inner().to_string(),
            });
        }
    };
    if let Err(msg) = model.check_loaded() {
        return schema("/uids")(msg);
    }
    let project = Project {
        model,
        journal: file.journal,
    };
    if let Some(stored) = stored_digest {
        let (_, computed) = encode_project(&project);
        if computed != stored {
            return Err(StoreError::DigestMismatch { stored, computed });
        }
    }
    Ok(project)
}

pub fn load_project(path: &Path) -> Result<Project, StoreError> {
    let bytes = std::fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_project(&bytes)
}
