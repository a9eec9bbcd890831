//! The systems hub: a UID-keyed store of every node, binding and edge.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::HubError;
use crate::journal::{Journal, JournalEntry, RefinementEdit};
use crate::model::{
    document_locator, parse_document_locator, parse_geometry_locator, Component, ConstraintRecord, DocFormat,
    DocumentArtifact, GeometryArtifact, Interaction, Modality, ModalityBinding, Priority, ReqType, Requirement,
    RequirementStatus, SourceRef, Span, StateMachine, TraceEdge, TraceKind,
};
use crate::uid::{Uid, UidRegistry};
use crate::units::{check_attribute, Quantity};

/// Trace and interaction edges of the model graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edges {
    #[serde(default)]
    pub traces: Vec<TraceEdge>,
    #[serde(default)]
    pub interactions: Vec<Interaction>,
}

/// Everything the project knows, minus the journal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub uids: UidRegistry,
    #[serde(with = "binding_list")]
    pub bindings: BTreeMap<(Uid, Modality), ModalityBinding>,
    #[serde(with = "uid_map")]
    pub components: BTreeMap<Uid, Component>,
    #[serde(with = "uid_map")]
    pub requirements: BTreeMap<Uid, Requirement>,
    #[serde(with = "uid_map")]
    pub documents: BTreeMap<Uid, DocumentArtifact>,
    #[serde(with = "uid_map")]
    pub geometry: BTreeMap<Uid, GeometryArtifact>,
    pub edges: Edges,
    #[serde(with = "uid_map")]
    pub constraints: BTreeMap<Uid, ConstraintRecord>,
    #[serde(with = "uid_map")]
    pub state_machines: BTreeMap<Uid, StateMachine>,
}

/// Borrowed view of a node's typed payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "data")]
pub enum NodePayload<'a> {
    Component(&'a Component),
    Requirement(&'a Requirement),
    Document(&'a DocumentArtifact),
    Geometry(&'a GeometryArtifact),
    Constraint(&'a ConstraintRecord),
    StateMachine(&'a StateMachine),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved<'a> {
    pub uid: Uid,
    pub bindings: Vec<ModalityBinding>,
    pub payload: Option<NodePayload<'a>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            "both" => Ok(Direction::Both),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub dangling_bindings: Vec<ModalityBinding>,
    pub dangling_edges: Vec<TraceEdge>,
    pub dangling_interactions: Vec<Interaction>,
    pub orphan_uids: Vec<Uid>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.dangling_bindings.is_empty()
            && self.dangling_edges.is_empty()
            && self.dangling_interactions.is_empty()
            && self.orphan_uids.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        for b in &self.dangling_bindings {
            parts.push(format!("dangling {:?} binding {} -> {}", b.modality, b.uid, b.locator));
        }
        for e in &self.dangling_edges {
            parts.push(format!("dangling edge {} -{:?}-> {}", e.src, e.kind, e.dst));
        }
        for i in &self.dangling_interactions {
            parts.push(format!("dangling interaction {} -{}-> {}", i.a, i.kind, i.b));
        }
        for u in &self.orphan_uids {
            parts.push(format!("orphan {u}"));
        }
        parts.join("; ")
    }
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_uid(&mut self, namespace: &str) -> Result<Uid, HubError> {
        self.uids.register(namespace)
    }

    fn ensure_live(&self, uid: &Uid) -> Result<(), HubError> {
        if self.uids.is_live(uid) {
            Ok(())
        } else {
            Err(HubError::Unregistered(uid.clone()))
        }
    }

    pub fn bind(
        &mut self,
        uid: &Uid,
        modality: Modality,
        locator: impl Into<String>,
    ) -> Result<ModalityBinding, HubError> {
        self.ensure_live(uid)?;
        let key = (uid.clone(), modality);
        if self.bindings.contains_key(&key) {
            return Err(HubError::DuplicateBinding {
                uid: uid.clone(),
                modality,
            });
        }
        let binding = ModalityBinding {
            uid: uid.clone(),
            modality,
            locator: locator.into(),
        };
        self.bindings.insert(key, binding.clone());
        Ok(binding)
    }

    pub fn unbind(&mut self, uid: &Uid, modality: Modality) -> Result<ModalityBinding, HubError> {
        self.bindings
            .remove(&(uid.clone(), modality))
            .ok_or_else(|| HubError::MissingBinding {
                uid: uid.clone(),
                modality,
            })
    }

    pub fn binding(&self, uid: &Uid, modality: Modality) -> Option<&ModalityBinding> {
        self.bindings.get(&(uid.clone(), modality))
    }

    pub fn bindings_of(&self, uid: &Uid) -> Vec<ModalityBinding> {
        self.bindings
            .range((uid.clone(), Modality::Document)..=(uid.clone(), Modality::Graph))
            .map(|(_, b)| b.clone())
            .collect()
    }

    pub fn payload(&self, uid: &Uid) -> Option<NodePayload<'_>> {
        if let Some(c) = self.components.get(uid) {
            return Some(NodePayload::Component(c));
        }
        if let Some(r) = self.requirements.get(uid) {
            return Some(NodePayload::Requirement(r));
        }
        if let Some(d) = self.documents.get(uid) {
            return Some(NodePayload::Document(d));
        }
        if let Some(g) = self.geometry.get(uid) {
            return Some(NodePayload::Geometry(g));
        }
        if let Some(c) = self.constraints.get(uid) {
            return Some(NodePayload::Constraint(c));
        }
        self.state_machines.get(uid).map(NodePayload::StateMachine)
    }

    pub fn resolve(&self, uid: &Uid) -> Result<Resolved<'_>, HubError> {
        self.ensure_live(uid)?;
        Ok(Resolved {
            uid: uid.clone(),
            bindings: self.bindings_of(uid),
            payload: self.payload(uid),
        })
    }

    pub fn add_trace(&mut self, src: &Uid, kind: TraceKind, dst: &Uid) -> Result<TraceEdge, HubError> {
        self.ensure_live(src)?;
        self.ensure_live(dst)?;
        if self
            .edges
            .traces
            .iter()
            .any(|e| &e.src == src && e.kind == kind && &e.dst == dst)
        {
            return Err(HubError::DuplicateTrace {
                src: src.clone(),
                kind,
                dst: dst.clone(),
            });
        }
        let edge = TraceEdge::new(src.clone(), kind, dst.clone());
        self.edges.traces.push(edge.clone());
        Ok(edge)
    }

    /// Adds the trace unless the same triple is already present.
    pub fn ensure_trace(&mut self, src: &Uid, kind: TraceKind, dst: &Uid) -> Result<(), HubError> {
        match self.add_trace(src, kind, dst) {
            Ok(_) | Err(HubError::DuplicateTrace { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    }

    pub fn outgoing<'a>(&'a self, uid: &'a Uid) -> impl Iterator<Item = &'a TraceEdge> + 'a {
        self.edges.traces.iter().filter(move |e| &e.src == uid)
    }

    pub fn incoming<'a>(&'a self, uid: &'a Uid) -> impl Iterator<Item = &'a TraceEdge> + 'a {
        self.edges.traces.iter().filter(move |e| &e.dst == uid)
    }

    /// Every uid reachable from `start` over unflagged trace edges whose kind
    /// is in `kinds`, following `direction`. `start` itself is excluded.
    pub fn impact_set(
        &self,
        start: &Uid,
        kinds: &BTreeSet<TraceKind>,
        direction: Direction,
    ) -> Result<BTreeSet<Uid>, HubError> {
        self.ensure_live(start)?;
        let mut adjacency: BTreeMap<&Uid, Vec<&Uid>> = BTreeMap::new();
        for e in self
            .edges
            .traces
            .iter()
            .filter(|e| !e.flagged && kinds.contains(&e.kind))
        {
            if matches!(direction, Direction::Forward | Direction::Both) {
                adjacency.entry(&e.src).or_default().push(&e.dst);
            }
            if matches!(direction, Direction::Backward | Direction::Both) {
                adjacency.entry(&e.dst).or_default().push(&e.src);
            }
        }
        let mut seen: BTreeSet<&Uid> = BTreeSet::from([start]);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            for &next in adjacency.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen.remove(start);
        Ok(seen.into_iter().cloned().collect())
    }

    /// Whether `uid` is live and carries a node payload.
    pub fn has_node(&self, uid: &Uid) -> bool {
        self.uids.is_live(uid) && self.payload(uid).is_some()
    }

    fn locator_resolves(&self, binding: &ModalityBinding) -> bool {
        match binding.modality {
            Modality::Graph => binding
                .locator
                .parse::<Uid>()
                .map(|u| self.has_node(&u))
                .unwrap_or(false),
            Modality::Document => match parse_document_locator(&binding.locator) {
                Some((doc, span)) => match (self.documents.get(&doc), span) {
                    (Some(d), Some(span)) if self.uids.is_live(&doc) => !span.is_empty() && span.end <= d.char_len(),
                    (Some(_), None) => self.uids.is_live(&doc),
                    _ => false,
                },
                None => false,
            },
            Modality::Geometry => match parse_geometry_locator(&binding.locator) {
                Some((file, product)) => self.geometry.values().any(|g| {
                    (g.file_name() == file || g.path == file)
                        && g.products.iter().any(|p| p == product)
                        && self.uids.is_live(&g.uid)
                }),
                None => self
                    .geometry
                    .values()
                    .any(|g| g.path == binding.locator && self.uids.is_live(&g.uid)),
            },
        }
    }

    pub fn validate_integrity(&self) -> IntegrityReport {
        let mut report = IntegrityReport::default();
        for binding in self.bindings.values() {
            if !self.uids.is_live(&binding.uid) || !self.locator_resolves(binding) {
                report.dangling_bindings.push(binding.clone());
            }
        }
        for edge in self.edges.traces.iter().filter(|e| !e.flagged) {
            if !self.uids.is_live(&edge.src) || !self.uids.is_live(&edge.dst) {
                report.dangling_edges.push(edge.clone());
            }
        }
        for i in &self.edges.interactions {
            let ends_ok = self.components.contains_key(&i.a)
                && self.components.contains_key(&i.b)
                && self.uids.is_live(&i.a)
                && self.uids.is_live(&i.b);
            let rationale_ok = i.rationale.iter().all(|r| self.requirements.contains_key(r));
            if !ends_ok || !rationale_ok {
                report.dangling_interactions.push(i.clone());
            }
        }
        for uid in self.uids.live() {
            if self.bindings_of(uid).is_empty() {
                report.orphan_uids.push(uid.clone());
            }
        }
        report
    }

    // ---- node insertion ---------------------------------------------------

    fn check_sibling_name(&self, name: &str, parent: Option<&Uid>, except: Option<&Uid>) -> Result<(), HubError> {
        let clash = self
            .components
            .values()
            .find(|c| c.parent.as_ref() == parent && Some(&c.uid) != except && c.name.eq_ignore_ascii_case(name));
        match clash {
            Some(c) => Err(HubError::DuplicateSiblingName {
                name: name.to_string(),
                existing: c.uid.clone(),
            }),
            None => Ok(()),
        }
    }

    /// Registers a component with a graph binding.
    pub fn add_component(&mut self, name: &str, parent: Option<Uid>) -> Result<Uid, HubError> {
        if let Some(p) = &parent {
            if !self.components.contains_key(p) {
                return Err(HubError::WrongNodeKind(p.clone()));
            }
        }
        self.check_sibling_name(name, parent.as_ref(), None)?;
        let uid = self.register_uid("cmp")?;
        let mut component = Component::new(uid.clone(), name);
        component.parent = parent;
        self.components.insert(uid.clone(), component);
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        Ok(uid)
    }

    pub fn rename_component(&mut self, uid: &Uid, name: &str) -> Result<(), HubError> {
        let parent = self
            .components
            .get(uid)
            .ok_or_else(|| HubError::WrongNodeKind(uid.clone()))?
            .parent
            .clone();
        self.check_sibling_name(name, parent.as_ref(), Some(uid))?;
        self.components.get_mut(uid).expect("checked").name = name.to_string();
        Ok(())
    }

    pub fn set_parent(&mut self, uid: &Uid, parent: Option<Uid>) -> Result<(), HubError> {
        let name = self
            .components
            .get(uid)
            .ok_or_else(|| HubError::WrongNodeKind(uid.clone()))?
            .name
            .clone();
        let mut cursor = parent.clone();
        while let Some(p) = cursor {
            if &p == uid {
                return Err(HubError::CyclicHierarchy(uid.clone()));
            }
            cursor = self
                .components
                .get(&p)
                .ok_or_else(|| HubError::WrongNodeKind(p.clone()))?
                .parent
                .clone();
        }
        self.check_sibling_name(&name, parent.as_ref(), Some(uid))?;
        self.components.get_mut(uid).expect("checked").parent = parent;
        Ok(())
    }

    pub fn set_attribute(&mut self, uid: &Uid, name: &str, value: Quantity) -> Result<(), HubError> {
        check_attribute(name, &value)?;
        let c = self
            .components
            .get_mut(uid)
            .ok_or_else(|| HubError::WrongNodeKind(uid.clone()))?;
        c.attributes.insert(name.to_string(), value);
        Ok(())
    }

    pub fn add_tag(&mut self, uid: &Uid, tag: &str) -> Result<(), HubError> {
        let c = self
            .components
            .get_mut(uid)
            .ok_or_else(|| HubError::WrongNodeKind(uid.clone()))?;
        c.function_tags.insert(tag.to_ascii_lowercase());
        Ok(())
    }

    /// Binds a component to a product of a registered STEP file.
    pub fn link_geometry(&mut self, uid: &Uid, locator: &str) -> Result<ModalityBinding, HubError> {
        if !self.components.contains_key(uid) {
            return Err(HubError::WrongNodeKind(uid.clone()));
        }
        let binding = self.bind(uid, Modality::Geometry, locator)?;
        self.components.get_mut(uid).expect("checked").geometry_ref = Some(locator.to_string());
        Ok(binding)
    }

    /// Registers a document with graph and whole-document bindings.
    pub fn add_document(
        &mut self,
        title: &str,
        text: String,
        format: DocFormat,
        sentences: Vec<Span>,
    ) -> Result<Uid, HubError> {
        let uid = self.register_uid("doc")?;
        self.documents.insert(
            uid.clone(),
            DocumentArtifact {
                uid: uid.clone(),
                title: title.to_string(),
                text,
                format,
                sentences,
            },
        );
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        self.bind(&uid, Modality::Document, document_locator(&uid, None))?;
        Ok(uid)
    }

    /// Registers a requirement with graph and source-span bindings plus a
    /// `DerivedFrom` trace to its document.
    pub fn add_requirement(
        &mut self,
        text: &str,
        req_type: ReqType,
        priority: Priority,
        source: SourceRef,
    ) -> Result<Uid, HubError> {
        if !self.documents.contains_key(&source.doc) || !self.uids.is_live(&source.doc) {
            return Err(HubError::WrongNodeKind(source.doc));
        }
        let uid = self.register_uid("req")?;
        self.requirements.insert(
            uid.clone(),
            Requirement {
                uid: uid.clone(),
                text: text.to_string(),
                req_type,
                priority,
                status: RequirementStatus::Proposed,
                source: source.clone(),
                custom: BTreeMap::new(),
            },
        );
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        self.bind(
            &uid,
            Modality::Document,
            document_locator(&source.doc, Some(source.span)),
        )?;
        self.add_trace(&uid, TraceKind::DerivedFrom, &source.doc)?;
        Ok(uid)
    }

    pub fn add_geometry(&mut self, path: &str, digest: &str, products: Vec<String>) -> Result<Uid, HubError> {
        let uid = self.register_uid("geo")?;
        self.geometry.insert(
            uid.clone(),
            GeometryArtifact {
                uid: uid.clone(),
                path: path.to_string(),
                digest: digest.to_string(),
                products,
            },
        );
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        self.bind(&uid, Modality::Geometry, path)?;
        Ok(uid)
    }

    pub fn add_constraint(&mut self, text: &str, origin: Option<Uid>) -> Result<Uid, HubError> {
        let uid = self.register_uid("cst")?;
        self.constraints.insert(
            uid.clone(),
            ConstraintRecord {
                uid: uid.clone(),
                text: text.to_string(),
                origin: origin.clone(),
            },
        );
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        if let Some(req) = origin {
            self.add_trace(&uid, TraceKind::Refines, &req)?;
        }
        Ok(uid)
    }

    /// Registers a state machine. The uid inside `machine` is replaced.
    pub fn add_state_machine(&mut self, mut machine: StateMachine) -> Result<Uid, HubError> {
        if !self.components.contains_key(&machine.owner) {
            return Err(HubError::WrongNodeKind(machine.owner.clone()));
        }
        machine.check_structure().map_err(HubError::InvalidEdit)?;
        let uid = self.register_uid("sm")?;
        machine.uid = uid.clone();
        let owner = machine.owner.clone();
        self.state_machines.insert(uid.clone(), machine);
        self.bind(&uid, Modality::Graph, uid.to_string())?;
        self.add_trace(&uid, TraceKind::Allocates, &owner)?;
        Ok(uid)
    }

    /// Drops a node's payload and its own bindings and tombstones the uid.
    /// References held by other nodes are left alone; `validate_integrity`
    /// reports them.
    pub fn remove_node(&mut self, uid: &Uid) -> Result<(), HubError> {
        self.ensure_live(uid)?;
        self.components.remove(uid);
        self.requirements.remove(uid);
        self.documents.remove(uid);
        self.geometry.remove(uid);
        self.constraints.remove(uid);
        self.state_machines.remove(uid);
        self.bindings.retain(|(u, _), _| u != uid);
        self.uids.tombstone(uid)
    }

    /// Component uids ordered by (uid) for deterministic iteration.
    pub fn component_ids(&self) -> Vec<Uid> {
        self.components.keys().cloned().collect()
    }

    pub(crate) fn check_loaded(&self) -> Result<(), String> {
        self.uids.check_consistent()?;
        let registered = |u: &Uid| self.uids.is_live(u) || self.uids.is_tombstoned(u);
        for (k, b) in &self.bindings {
            if k.0 != b.uid || k.1 != b.modality {
                return Err(format!("binding key mismatch for {}", b.uid));
            }
        }
        for e in &self.edges.traces {
            if !registered(&e.src) || !registered(&e.dst) {
                return Err(format!("trace {} -> {} references an unissued uid", e.src, e.dst));
            }
        }
        Ok(())
    }
}

/// Model plus journal: the unit that is saved and loaded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Project {
    pub model: Model,
    pub journal: Journal,
}

impl Project {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a pipeline stage: the snapshot becomes the current model.
    pub fn checkpoint(&mut self, stage: &str) {
        let digest = crate::store::model_digest(&self.model);
        self.journal.snapshot = Some(Box::new(self.model.clone()));
        self.journal.entries.push(JournalEntry::Checkpoint {
            stage: stage.to_string(),
            digest,
        });
    }

    pub fn record_edit(&mut self, edit: RefinementEdit) {
        self.journal.entries.push(JournalEntry::Edit(edit));
    }
}

mod uid_map {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub trait Keyed {
        fn uid(&self) -> &Uid;
    }

    macro_rules! keyed {
        ($($t:ty),*) => {$(
            impl Keyed for $t {
                fn uid(&self) -> &Uid { &self.uid }
            }
        )*};
    }
    keyed!(
        Component,
        Requirement,
        DocumentArtifact,
        GeometryArtifact,
        ConstraintRecord,
        StateMachine
    );

    pub fn serialize<T: Serialize, S: Serializer>(map: &BTreeMap<Uid, T>, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.values())
    }

    pub fn deserialize<'de, T, D>(deserializer: D) -> Result<BTreeMap<Uid, T>, D::Error>
    where
        T: Deserialize<'de> + Keyed,
        D: Deserializer<'de>,
    {
        let items = Vec::<T>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for item in items {
            let uid = item.uid().clone();
            if map.insert(uid.clone(), item).is_some() {
                return Err(D::Error::custom(format!("duplicate entry for {uid}")));
            }
        }
        Ok(map)
    }
}

mod binding_list {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(Uid, Modality), ModalityBinding>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(map.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<(Uid, Modality), ModalityBinding>, D::Error> {
        let items = Vec::<ModalityBinding>::deserialize(deserializer)?;
        let mut map = BTreeMap::new();
        for b in items {
            let key = (b.uid.clone(), b.modality);
            if map.insert(key, b).is_some() {
                return Err(D::Error::custom("duplicate binding"));
            }
        }
        Ok(map)
    }
}
