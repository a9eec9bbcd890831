//! Extraction scored against the hand labels of the CubeSat corpus. Shared
//! with the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use workbench_core::{DocFormat, Model, Uid};
use workbench_docpipe::{extract_all, ingest_document, ExtractorAdapter};

pub const DOCS: [&str; 4] = ["mission.md", "power.txt", "avionics.md", "notes.txt"];
pub const CAMERA_SENTENCE: &str = "The camera shall send data to the processing unit.";

#[derive(Debug)]
pub struct Score {
    pub documents: usize,
    pub sentences: usize,
    pub labelled: usize,
    pub true_positives: usize,
    pub false_positives: Vec<String>,
    pub missed: Vec<String>,
    /// Extracted texts that differ from their source slice.
    pub not_verbatim: Vec<String>,
}

impl Score {
    pub fn precision(&self) -> f64 {
        let found = self.true_positives + self.false_positives.len();
        if found == 0 {
            0.0
        } else {
            self.true_positives as f64 / found as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.labelled == 0 {
            0.0
        } else {
            self.true_positives as f64 / self.labelled as f64
        }
    }
}

pub fn format_of(name: &str) -> DocFormat {
    if name.ends_with(".md") {
        DocFormat::Markdown
    } else {
        DocFormat::PlainText
    }
}

pub fn ingest_corpus(dir: &Path) -> (Model, BTreeMap<Uid, String>) {
    let mut m = Model::new();
    let mut names = BTreeMap::new();
    for name in DOCS {
        let raw = std::fs::read(dir.join("docs").join(name)).unwrap();
        let uid = ingest_document(&mut m, name, &raw, format_of(name)).unwrap();
        names.insert(uid, name.to_string());
    }
    (m, names)
}

pub fn labels(dir: &Path) -> BTreeMap<String, BTreeSet<String>> {
    let text = std::fs::read_to_string(dir.join("labels.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Ingests the corpus under `dir`, extracts with `adapter` and compares the
/// requirement texts per document with `labels.json`.
pub fn score(dir: &Path, adapter: &ExtractorAdapter) -> Score {
    let (mut m, names) = ingest_corpus(dir);
    let sentences = m.documents.values().map(|d| d.sentences.len()).sum();
    let uids = extract_all(&mut m, adapter).unwrap();
    let mut got: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut not_verbatim = Vec::new();
    for u in &uids {
        let r = &m.requirements[u];
        let doc = &m.documents[&r.source.doc];
        if doc.slice(r.source.span) != Some(r.text.as_str()) {
            not_verbatim.push(r.text.clone());
        }
        got.entry(names[&r.source.doc].clone())
            .or_default()
            .insert(r.text.clone());
    }
    let want = labels(dir);
    let mut s = Score {
        documents: m.documents.len(),
        sentences,
        labelled: want.values().map(BTreeSet::len).sum(),
        true_positives: 0,
        false_positives: Vec::new(),
        missed: Vec::new(),
        not_verbatim,
    };
    for name in DOCS {
        let g = got.get(name).cloned().unwrap_or_default();
        let w = want.get(name).cloned().unwrap_or_default();
        s.true_positives += g.intersection(&w).count();
        s.false_positives.extend(g.difference(&w).cloned());
        s.missed.extend(w.difference(&g).cloned());
    }
    s
}
