//! Architecture synthesis: components and interactions from requirements,
//! the DSM view of the resulting graph, and journaled refinement edits.

pub mod dsm;
pub mod edit;
pub mod error;
pub mod identify;

pub use dsm::{build_dsm, dsm_to_graph, graph_to_dsm, Dsm, DsmCell};
pub use edit::{apply_edit, apply_op, replay_journal};
pub use error::SynthError;
pub use identify::{
    component_name, identify_components, infer_interactions, merge_interaction, ComponentCandidate, VerbTable,
};

use serde::Serialize;
use workbench_core::{Model, Requirement, RequirementStatus, TraceKind, Uid};
use workbench_docpipe::Lexicon;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SynthesisSummary {
    pub created: Vec<Uid>,
    pub components: usize,
    pub interactions: usize,
}

/// Runs identification and interaction inference over the non-rejected
/// requirements and writes the result into the model. Candidates whose name
/// matches an existing top-level component (case-insensitively) reuse it.
/// Each component is traced `DerivedFrom` and `Satisfies` to the
/// requirements that mention it.
pub fn synthesize(model: &mut Model, lexicon: &Lexicon, verbs: &VerbTable) -> Result<SynthesisSummary, SynthError> {
    let reqs: Vec<Requirement> = model
        .requirements
        .values()
        .filter(|r| r.status != RequirementStatus::Rejected)
        .cloned()
        .collect();
    let candidates = identify_components(&reqs, lexicon);
    let mut summary = SynthesisSummary::default();
    let mut named: Vec<(Uid, String)> = Vec::new();
    for c in &candidates {
        let existing = model
            .components
            .values()
            .find(|m| m.parent.is_none() && m.name.eq_ignore_ascii_case(&c.name))
            .map(|m| m.uid.clone());
        let uid = match existing {
            Some(u) => u,
            None => {
                let u = model.add_component(&c.name, None)?;
                summary.created.push(u.clone());
                u
            }
        };
        for t in &c.function_tags {
            model.add_tag(&uid, t)?;
        }
        for r in &c.sources {
            model.ensure_trace(&uid, TraceKind::DerivedFrom, r)?;
            model.ensure_trace(&uid, TraceKind::Satisfies, r)?;
        }
        let name = model.components[&uid].name.clone();
        named.push((uid, name));
    }
    for i in infer_interactions(&reqs, &named, lexicon, verbs) {
        merge_interaction(&mut model.edges.interactions, i);
    }
    summary.components = named.len();
    summary.interactions = model.edges.interactions.len();
    Ok(summary)
}
