//! Document labeler: ingestion, two-stage requirement extraction (annotate
//! candidate sentences, then convert them) and the term glossary.

pub mod annotate;
pub mod convert;
pub mod error;
pub mod glossary;
pub mod ingest;
pub mod lexicon;

pub use annotate::{annotate_candidates, AdapterMode, CandidateSpan, ExtractorAdapter, LiveEndpoint, ReplayLog};
pub use convert::{classify, convert_to_requirements, priority_for, register_requirements, RequirementDraft};
pub use error::DocError;
pub use glossary::{build_glossary, Glossary, GlossaryEntry};
pub use ingest::{ingest_document, normalize, segment};
pub use lexicon::{singularize, title_case, Lexicon, TermMatch};

use workbench_core::{Model, Uid};

/// Annotates and converts every document in the model, registering new
/// requirements. Fails without touching the model if any document fails.
pub fn extract_all(model: &mut Model, adapter: &ExtractorAdapter) -> Result<Vec<Uid>, DocError> {
    let mut candidates = Vec::new();
    for doc in model.documents.values() {
        candidates.extend(annotate_candidates(doc, adapter)?);
    }
    let drafts = convert_to_requirements(model, &candidates)?;
    register_requirements(model, &drafts)
}
