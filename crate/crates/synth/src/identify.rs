//! Components and interactions read off requirement sentences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use workbench_core::{Interaction, InteractionKind, Requirement, Uid};
use workbench_docpipe::lexicon::{singularize, title_case, Lexicon, AUXILIARIES, MODALS};

use crate::error::SynthError;

const DEFAULT_VERBS: &str = include_str!("../data/verbs.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbRule {
    pub kind: InteractionKind,
    pub directed: bool,
}

/// Verb (any inflection listed) to interaction kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VerbTable(BTreeMap<String, VerbRule>);

impl Default for VerbTable {
    fn default() -> Self {
        VerbTable::from_json(DEFAULT_VERBS).expect("bundled verb table is valid")
    }
}

impl VerbTable {
    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let raw: BTreeMap<String, VerbRule> =
            serde_json::from_str(text).map_err(|e| SynthError::Config(format!("verb table: {e}")))?;
        Ok(VerbTable(raw.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect()))
    }

    pub fn get(&self, verb: &str) -> Option<VerbRule> {
        self.0.get(&verb.to_lowercase()).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCandidate {
    pub name: String,
    pub function_tags: BTreeSet<String>,
    /// Requirements mentioning the component, in first-mention order.
    pub sources: Vec<Uid>,
    pub mentions: usize,
}

impl ComponentCandidate {
    pub fn key(&self) -> String {
        self.name.to_lowercase()
    }
}

/// A component mention inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Mention {
    key: String,
    name: String,
    start: usize,
    end: usize,
}

/// Canonical component name for a noun phrase as written, when the phrase
/// names something in the component vocabulary.
pub fn component_name(lexicon: &Lexicon, surface: &str) -> Option<String> {
    lexicon.component_entry(surface)?;
    Some(title_case(&singularize(surface)))
}

fn mentions(lexicon: &Lexicon, text: &str) -> Vec<Mention> {
    lexicon
        .terms(text)
        .into_iter()
        .filter_map(|t| {
            let name = component_name(lexicon, &t.surface)?;
            Some(Mention {
                key: name.to_lowercase(),
                name,
                start: t.span.start,
                end: t.span.end,
            })
        })
        .collect()
}

fn in_order(reqs: &[Requirement]) -> Vec<&Requirement> {
    let mut v: Vec<&Requirement> = reqs.iter().collect();
    v.sort_by(|a, b| (&a.source.doc, a.source.span.start, &a.uid).cmp(&(&b.source.doc, b.source.span.start, &b.uid)));
    v
}

/// Component-vocabulary noun phrases of the requirements, deduplicated by
/// case-folded singular name and ordered by first mention.
pub fn identify_components(reqs: &[Requirement], lexicon: &Lexicon) -> Vec<ComponentCandidate> {
    let mut out: Vec<ComponentCandidate> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for r in in_order(reqs) {
        for m in mentions(lexicon, &r.text) {
            let i = *index.entry(m.key.clone()).or_insert_with(|| {
                let tags = lexicon
                    .component_entry(&m.name)
                    .map(|(_, t)| t.clone())
                    .unwrap_or_default();
                out.push(ComponentCandidate {
                    name: m.name.clone(),
                    function_tags: tags,
                    sources: Vec::new(),
                    mentions: 0,
                });
                out.len() - 1
            });
            let c = &mut out[i];
            c.mentions += 1;
            if !c.sources.contains(&r.uid) {
                c.sources.push(r.uid.clone());
            }
        }
    }
    out
}

struct WordAt {
    lower: String,
    start: usize,
    end: usize,
}

fn words(text: &str) -> Vec<WordAt> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, String)> = None;
    for (i, c) in text.chars().enumerate() {
        if c.is_alphanumeric() || (c == '-' && cur.is_some()) {
            cur.get_or_insert_with(|| (i, String::new())).1.extend(c.to_lowercase());
        } else if let Some((start, w)) = cur.take() {
            out.push(WordAt {
                lower: w,
                start,
                end: i,
            });
        }
    }
    if let Some((start, w)) = cur {
        let end = start + w.chars().count();
        out.push(WordAt { lower: w, start, end });
    }
    out
}

/// Main verb of a sentence that the table knows: the word in the slot after
/// the first modal, else the first table word outside any component mention.
/// Returns the rule, the verb's character range and whether it is passive
/// (followed by `by`).
fn find_verb(text: &str, verbs: &VerbTable, mentions: &[Mention]) -> Option<(VerbRule, usize, bool)> {
    let ws = words(text);
    let passive = |i: usize| ws.get(i + 1).is_some_and(|w| w.lower == "by");
    if let Some(m) = ws.iter().position(|w| MODALS.contains(&w.lower.as_str())) {
        let slot = ws[m + 1..]
            .iter()
            .position(|w| !AUXILIARIES.contains(&w.lower.as_str()))
            .map(|p| m + 1 + p);
        if let Some(i) = slot {
            if let Some(rule) = verbs.get(&ws[i].lower) {
                return Some((rule, ws[i].start, passive(i)));
            }
        }
    }
    let inside = |w: &WordAt| mentions.iter().any(|m| w.start >= m.start && w.end <= m.end);
    ws.iter()
        .enumerate()
        .find(|(_, w)| !inside(w) && verbs.get(&w.lower).is_some())
        .map(|(i, w)| (verbs.get(&w.lower).expect("checked"), w.start, passive(i)))
}

/// Interactions implied by requirement sentences that mention at least two
/// known components. Mentions before the verb are sources, those after it
/// targets (swapped for passive verbs); with no mention before the verb the
/// first mention is the source.
pub fn infer_interactions(
    reqs: &[Requirement],
    components: &[(Uid, String)],
    lexicon: &Lexicon,
    verbs: &VerbTable,
) -> Vec<Interaction> {
    let by_key: BTreeMap<String, &Uid> = components.iter().map(|(u, n)| (n.to_lowercase(), u)).collect();
    let mut merged: Vec<Interaction> = Vec::new();
    for r in in_order(reqs) {
        let ms = mentions(lexicon, &r.text);
        let mut seen = BTreeSet::new();
        let ms: Vec<&Mention> = ms
            .iter()
            .filter(|m| by_key.contains_key(&m.key) && seen.insert(m.key.clone()))
            .collect();
        if ms.len() < 2 {
            continue;
        }
        let owned: Vec<Mention> = ms.iter().map(|m| (*m).clone()).collect();
        let Some((rule, at, passive)) = find_verb(&r.text, verbs, &owned) else {
            log::debug!("{}: no interaction verb", r.uid);
            continue;
        };
        let (mut before, mut after): (Vec<&Mention>, Vec<&Mention>) = ms.iter().copied().partition(|m| m.start < at);
        if passive {
            std::mem::swap(&mut before, &mut after);
        }
        if before.is_empty() || after.is_empty() {
            let all = ms.clone();
            before = vec![all[0]];
            after = all[1..].to_vec();
        }
        for s in &before {
            for t in &after {
                let (a, b) = (by_key[&s.key].clone(), by_key[&t.key].clone());
                if a == b {
                    continue;
                }
                let mut i = Interaction::new(a, b, rule.kind, rule.directed);
                i.rationale.push(r.uid.clone());
                merge_interaction(&mut merged, i);
            }
        }
    }
    merged
}

/// Adds an interaction, merging rationale into an existing one with the same
/// endpoints, kind and directedness.
pub fn merge_interaction(list: &mut Vec<Interaction>, new: Interaction) {
    match list.iter_mut().find(|i| i.key() == new.key()) {
        Some(existing) => existing.merge_rationale(&new.rationale),
        None => list.push(new),
    }
}
