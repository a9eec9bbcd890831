//! Human-in-the-loop refinement edits and the append-only journal.
//!
//! The journal keeps the model state as of the most recent pipeline stage
//! (`snapshot`) and every entry since the project was created. Replaying the
//! edits recorded after the last checkpoint over the snapshot reproduces the
//! current model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::InteractionKind;
use crate::project::Model;
use crate::uid::Uid;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "payload")]
pub enum EditOp {
    AddComponent {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parent: Option<Uid>,
        #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
        function_tags: BTreeSet<String>,
    },
    RemoveComponent {
        uid: Uid,
    },
    RenameComponent {
        uid: Uid,
        name: String,
    },
    MergeComponents {
        survivor: Uid,
        absorbed: Uid,
    },
    /// Marks `col` as an input to `row` (row-receiver convention).
    SetCell {
        row: Uid,
        col: Uid,
        kind: InteractionKind,
    },
    /// Clears one kind from a cell, or the whole cell when `kind` is absent.
    ClearCell {
        row: Uid,
        col: Uid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kind: Option<InteractionKind>,
    },
    AcceptRequirement {
        uid: Uid,
    },
    RejectRequirement {
        uid: Uid,
    },
    EditRequirementText {
        uid: Uid,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementEdit {
    #[serde(flatten)]
    pub op: EditOp,
    pub author: String,
    /// Unix seconds.
    pub timestamp: i64,
}

impl RefinementEdit {
    pub fn new(op: EditOp, author: impl Into<String>, timestamp: i64) -> Self {
        Self {
            op,
            author: author.into(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum JournalEntry {
    /// A pipeline stage (ingest, extract, synthesize, ...) replaced the snapshot.
    Checkpoint {
        stage: String,
        digest: String,
    },
    Edit(RefinementEdit),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Journal {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<Box<Model>>,
    #[serde(default)]
    pub entries: Vec<JournalEntry>,
}

impl Journal {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Edits recorded after the most recent checkpoint, in order.
    pub fn pending_edits(&self) -> impl Iterator<Item = &RefinementEdit> {
        let start = self
            .entries
            .iter()
            .rposition(|e| matches!(e, JournalEntry::Checkpoint { .. }))
            .map_or(0, |i| i + 1);
        self.entries[start..].iter().filter_map(|e| match e {
            JournalEntry::Edit(edit) => Some(edit),
            JournalEntry::Checkpoint { .. } => None,
        })
    }
}
