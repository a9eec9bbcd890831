use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Modality, TraceKind};
use crate::uid::Uid;

#[derive(Debug, Error)]
pub enum HubError {
    #[error("invalid uid `{0}`")]
    InvalidUid(String),
    #[error("unknown namespace `{0}`")]
    UnknownNamespace(String),
    #[error("uid {0} is not registered")]
    Unregistered(Uid),
    #[error("{uid} already has a {modality:?} binding")]
    DuplicateBinding { uid: Uid, modality: Modality },
    #[error("{uid} has no {modality:?} binding")]
    MissingBinding { uid: Uid, modality: Modality },
    #[error("trace {src} -{kind:?}-> {dst} already exists")]
    DuplicateTrace { src: Uid, kind: TraceKind, dst: Uid },
    #[error("{0} has no node payload of the expected kind")]
    WrongNodeKind(Uid),
    #[error("component name `{name}` already used by a sibling ({existing})")]
    DuplicateSiblingName { name: String, existing: Uid },
    #[error("parent chain through {0} would be cyclic")]
    CyclicHierarchy(Uid),
    #[error("invalid quantity `{0}`")]
    InvalidQuantity(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("attribute `{name}` expects {expected} but got unit {unit}")]
    AttributeUnit {
        name: String,
        expected: String,
        unit: String,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("invalid status transition for {uid}: {from:?} -> {to:?}")]
    StatusTransition {
        uid: Uid,
        from: crate::model::RequirementStatus,
        to: crate::model::RequirementStatus,
    },
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("refusing to save: project has integrity errors ({0})")]
    IntegrityRefused(String),
    #[error("unsupported project version {0}")]
    UnknownVersion(u64),
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("digest mismatch: file says {stored}, content hashes to {computed}")]
    DigestMismatch { stored: String, computed: String },
}
