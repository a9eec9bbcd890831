//! Second extraction stage: turn candidate sentences into requirements.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use workbench_core::{Model, Priority, ReqType, SourceRef, Uid};

use crate::annotate::CandidateSpan;
use crate::error::DocError;

const UNITS: &str = "mm|cm|m|km|g|kg|mg|W|mW|kW|Wh|V|mV|kV|A|mA|Hz|kHz|MHz|GHz|s|ms|us|min|h|hr|hours?|minutes?|seconds?|days?|deg|degrees?|°|°C|K|%|bps|kbps|Mbps|dB|dBm|N|Nm|mNm|rpm|arcsec|krad";

fn interface_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(interfaces?|send|sends|sending|connects?|connected|connection|connecting)\b").unwrap()
    })
}

fn comparison_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\bnot\s+exceed\b|\bexceeds?\b|\bat\s+(most|least)\b|\b(no|not)\s+(more|less|fewer|greater)\s+than\b|\b(less|more|fewer|greater|lower|higher)\s+than\b|\b(maximum|minimum)\s+of\b|<=|>=|≤|≥|[<>]",
        )
        .unwrap()
    })
}

fn performance_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"(?i)\bwithin\b|\d(\.\d+)?\s*({UNITS})(\b|$|[^\w])")).unwrap())
}

/// Keyword rules, checked in order: interface, constraint, performance,
/// functional.
pub fn classify(text: &str) -> ReqType {
    if interface_re().is_match(text) {
        ReqType::Interface
    } else if comparison_re().is_match(text) {
        ReqType::Constraint
    } else if performance_re().is_match(text) {
        ReqType::Performance
    } else {
        ReqType::Functional
    }
}

pub fn priority_for(trigger: &str) -> Priority {
    match trigger.to_lowercase().as_str() {
        "shall" | "must" => Priority::High,
        "will" => Priority::Med,
        _ => Priority::Low,
    }
}

/// A requirement before it is registered in the hub.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementDraft {
    pub text: String,
    pub req_type: ReqType,
    pub priority: Priority,
    pub source: SourceRef,
}

/// One draft per candidate, ordered by (document, span start).
pub fn convert_to_requirements(model: &Model, candidates: &[CandidateSpan]) -> Result<Vec<RequirementDraft>, DocError> {
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        let doc = model
            .documents
            .get(&c.doc)
            .ok_or_else(|| DocError::DanglingDocument(c.doc.clone()))?;
        if !doc.sentences.contains(&c.span) {
            return Err(DocError::Adapter(format!(
                "span {:?} is not a sentence of {}",
                c.span, c.doc
            )));
        }
        let text = doc.slice(c.span).expect("sentence spans are in bounds").to_string();
        out.push(RequirementDraft {
            req_type: classify(&text),
            priority: priority_for(&c.trigger),
            source: SourceRef {
                doc: c.doc.clone(),
                span: c.span,
            },
            text,
        });
    }
    out.sort_by(|a, b| (&a.source.doc, a.source.span.start).cmp(&(&b.source.doc, b.source.span.start)));
    Ok(out)
}

/// Adds drafts as Proposed requirements. Sources that already carry a
/// requirement are skipped, so re-running extraction is idempotent.
pub fn register_requirements(model: &mut Model, drafts: &[RequirementDraft]) -> Result<Vec<Uid>, DocError> {
    for d in drafts {
        if !model.documents.contains_key(&d.source.doc) {
            return Err(DocError::DanglingDocument(d.source.doc.clone()));
        }
    }
    let mut seen: BTreeSet<SourceRef> = model.requirements.values().map(|r| r.source.clone()).collect();
    let mut uids = Vec::new();
    for d in drafts {
        if !seen.insert(d.source.clone()) {
            continue;
        }
        uids.push(model.add_requirement(&d.text, d.req_type, d.priority, d.source.clone())?);
    }
    Ok(uids)
}
