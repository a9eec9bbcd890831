//! Node and edge payloads of the model graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::uid::Uid;
use crate::units::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Document,
    Geometry,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModalityBinding {
    pub uid: Uid,
    pub modality: Modality,
    /// Document span (`doc-0#12..40`), geometry product
    /// (`cubesat.step#PRODUCT'BUS'`) or graph node id (the rendered uid).
    pub locator: String,
}

/// Character span `[start, end)` counted in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Slices `text` by character offsets. `None` when the span is out of bounds
/// or reversed.
pub fn slice_chars(text: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let start = indices.nth(span.start)?;
    let end = if span.end == span.start {
        start
    } else {
        indices.nth(span.end - span.start - 1)?
    };
    Some(&text[start..end])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub uid: Uid,
    pub name: String,
    #[serde(default)]
    pub function_tags: BTreeSet<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Uid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry_ref: Option<String>,
}

impl Component {
    pub fn new(uid: Uid, name: impl Into<String>) -> Self {
        Self {
            uid,
            name: name.into(),
            function_tags: BTreeSet::new(),
            attributes: BTreeMap::new(),
            parent: None,
            geometry_ref: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReqType {
    Functional,
    Performance,
    Interface,
    Constraint,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Priority {
    Low,
    Med,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequirementStatus {
    Proposed,
    Accepted,
    Rejected,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceRef {
    pub doc: Uid,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub uid: Uid,
    pub text: String,
    pub req_type: ReqType,
    pub priority: Priority,
    pub status: RequirementStatus,
    pub source: SourceRef,
    #[serde(default)]
    pub custom: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TraceKind {
    Refines,
    Implements,
    Tests,
    Satisfies,
    Allocates,
    DerivedFrom,
}

impl TraceKind {
    pub const ALL: [TraceKind; 6] = [
        TraceKind::Refines,
        TraceKind::Implements,
        TraceKind::Tests,
        TraceKind::Satisfies,
        TraceKind::Allocates,
        TraceKind::DerivedFrom,
    ];
}

impl FromStr for TraceKind {
    type Err = String;

    /// Case-insensitive; accepts `derived-from`, `derived_from` and `derivedfrom`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        TraceKind::ALL
            .into_iter()
            .find(|k| format!("{k:?}").to_lowercase() == norm)
            .ok_or_else(|| format!("unknown trace kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceEdge {
    pub src: Uid,
    pub kind: TraceKind,
    pub dst: Uid,
    /// Set when an endpoint was removed by a refinement edit. Flagged edges
    /// are kept for review but ignored by traversal and integrity checks.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

impl TraceEdge {
    pub fn new(src: Uid, kind: TraceKind, dst: Uid) -> Self {
        Self {
            src,
            kind,
            dst,
            flagged: false,
        }
    }

    pub fn key(&self) -> (&Uid, TraceKind, &Uid) {
        (&self.src, self.kind, &self.dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InteractionKind {
    Spatial,
    Energy,
    Information,
    Material,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 4] = [
        InteractionKind::Spatial,
        InteractionKind::Energy,
        InteractionKind::Information,
        InteractionKind::Material,
    ];

    pub fn letter(self) -> char {
        match self {
            InteractionKind::Spatial => 'S',
            InteractionKind::Energy => 'E',
            InteractionKind::Information => 'I',
            InteractionKind::Material => 'M',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.letter() == c)
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for InteractionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| {
                k.to_string().to_ascii_lowercase() == lower
                    || (s.len() == 1 && k.letter() == s.chars().next().unwrap().to_ascii_uppercase())
            })
            .ok_or_else(|| format!("unknown interaction kind `{s}`"))
    }
}

/// A pairwise interaction between two components. A directed interaction
/// flows from `a` to `b`; undirected ones are stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interaction {
    pub a: Uid,
    pub b: Uid,
    pub kind: InteractionKind,
    pub directed: bool,
    #[serde(default)]
    pub rationale: Vec<Uid>,
}

impl Interaction {
    /// Builds an interaction in canonical orientation.
    pub fn new(a: Uid, b: Uid, kind: InteractionKind, directed: bool) -> Self {
        let (a, b) = if !directed && b < a { (b, a) } else { (a, b) };
        Self {
            a,
            b,
            kind,
            directed,
            rationale: Vec::new(),
        }
    }

    pub fn key(&self) -> (Uid, Uid, InteractionKind, bool) {
        (self.a.clone(), self.b.clone(), self.kind, self.directed)
    }

    pub fn touches(&self, uid: &Uid) -> bool {
        &self.a == uid || &self.b == uid
    }

    pub fn connects(&self, x: &Uid, y: &Uid) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }

    /// Adds rationale uids keeping the list sorted and free of duplicates.
    pub fn merge_rationale<'a>(&mut self, more: impl IntoIterator<Item = &'a Uid>) {
        let mut set: BTreeSet<Uid> = self.rationale.drain(..).collect();
        set.extend(more.into_iter().cloned());
        self.rationale = set.into_iter().collect();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocFormat {
    PlainText,
    Markdown,
}

impl FromStr for DocFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "plain" | "plaintext" | "txt" => Ok(DocFormat::PlainText),
            "markdown" | "md" => Ok(DocFormat::Markdown),
            _ => Err(format!("unknown document format `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentArtifact {
    pub uid: Uid,
    pub title: String,
    pub text: String,
    pub format: DocFormat,
    pub sentences: Vec<Span>,
}

impl DocumentArtifact {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn slice(&self, span: Span) -> Option<&str> {
        slice_chars(&self.text, span)
    }
}

/// A STEP file referenced by the project. The file itself stays on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryArtifact {
    pub uid: Uid,
    /// Path relative to the project file.
    pub path: String,
    /// Hex sha-256 of the file bytes at registration time.
    pub digest: String,
    /// Product names found in the file.
    pub products: Vec<String>,
}

impl GeometryArtifact {
    /// Final path component, used as the file part of geometry locators.
    pub fn file_name(&self) -> &str {
        self.path.rsplit(['/', '\\']).next().unwrap_or(&self.path)
    }
}

/// Parses `<file>#PRODUCT'<name>'`.
pub fn parse_geometry_locator(locator: &str) -> Option<(&str, &str)> {
    let (file, rest) = locator.split_once('#')?;
    let name = rest.strip_prefix("PRODUCT'")?.strip_suffix('\'')?;
    (!file.is_empty() && !name.is_empty()).then_some((file, name))
}

pub fn geometry_locator(file: &str, product: &str) -> String {
    format!("{file}#PRODUCT'{product}'")
}

/// Parses `<doc-uid>` or `<doc-uid>#<start>..<end>`.
pub fn parse_document_locator(locator: &str) -> Option<(Uid, Option<Span>)> {
    match locator.split_once('#') {
        None => Some((locator.parse().ok()?, None)),
        Some((doc, range)) => {
            let (s, e) = range.split_once("..")?;
            Some((doc.parse().ok()?, Some(Span::new(s.parse().ok()?, e.parse().ok()?))))
        }
    }
}

pub fn document_locator(doc: &Uid, span: Option<Span>) -> String {
    match span {
        Some(s) => format!("{doc}#{}..{}", s.start, s.end),
        None => doc.to_string(),
    }
}

/// Constraint DSL statement. The syntax tree is rebuilt from `text` when needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub uid: Uid,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Uid>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub init: i64,
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub var: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    #[serde(default)]
    pub assigns: Vec<Assignment>,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateInvariant {
    /// State the invariant applies in; `*` for every state.
    pub state: String,
    pub expr: String,
}

/// Behavior model attached to a component. Guards, assignments and invariants
/// are integer expressions kept as source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMachine {
    pub uid: Uid,
    pub owner: Uid,
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub final_states: Vec<String>,
    pub transitions: Vec<Transition>,
    #[serde(default)]
    pub variables: BTreeMap<String, VarDecl>,
    #[serde(default)]
    pub invariants: Vec<StateInvariant>,
}

impl StateMachine {
    /// Structural checks: initial and transition endpoints are declared states,
    /// variable ranges are non-empty and contain their initial values.
    pub fn check_structure(&self) -> Result<(), String> {
        let known: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        if known.len() != self.states.len() {
            return Err("duplicate state names".into());
        }
        if !known.contains(self.initial.as_str()) {
            return Err(format!("initial state `{}` is not declared", self.initial));
        }
        for t in &self.transitions {
            for s in [&t.from, &t.to] {
                if !known.contains(s.as_str()) {
                    return Err(format!("transition `{}` uses undeclared state `{s}`", t.event));
                }
            }
            for a in &t.assigns {
                if !self.variables.contains_key(&a.var) {
                    return Err(format!("transition `{}` assigns undeclared `{}`", t.event, a.var));
                }
            }
        }
        for s in &self.final_states {
            if !known.contains(s.as_str()) {
                return Err(format!("final state `{s}` is not declared"));
            }
        }
        for inv in &self.invariants {
            if inv.state != "*" && !known.contains(inv.state.as_str()) {
                return Err(format!("invariant on undeclared state `{}`", inv.state));
            }
        }
        for (name, v) in &self.variables {
            if v.min > v.max || v.init < v.min || v.init > v.max {
                return Err(format!("variable `{name}` has an invalid range"));
            }
        }
        Ok(())
    }
}
