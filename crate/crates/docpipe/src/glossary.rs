use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use workbench_core::{DocumentArtifact, Span, Uid};

use crate::lexicon::Lexicon;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossaryEntry {
    pub count: usize,
    /// Occurrences in (document, span start) order.
    pub spans: Vec<(Uid, Span)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Glossary {
    pub entries: BTreeMap<String, GlossaryEntry>,
}

impl Glossary {
    pub fn get(&self, term: &str) -> Option<&GlossaryEntry> {
        self.entries.get(&term.to_lowercase())
    }

    pub fn count(&self, term: &str) -> usize {
        self.get(term).map_or(0, |e| e.count)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn record(&mut self, term: String, doc: &Uid, span: Span) {
        let e = self.entries.entry(term).or_default();
        e.count += 1;
        e.spans.push((doc.clone(), span));
    }

    /// Terms ordered by descending count, ties alphabetical.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.entries.iter().map(|(k, e)| (k.as_str(), e.count)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

/// Noun-phrase glossary over the sentences of `docs`. Spans are document
/// character offsets of each occurrence.
pub fn build_glossary<'a>(docs: impl IntoIterator<Item = &'a DocumentArtifact>, lexicon: &Lexicon) -> Glossary {
    let mut docs: Vec<&DocumentArtifact> = docs.into_iter().collect();
    docs.sort_by(|a, b| a.uid.cmp(&b.uid));
    let mut g = Glossary::default();
    for doc in docs {
        for s in &doc.sentences {
            let Some(text) = doc.slice(*s) else { continue };
            for m in lexicon.terms(text) {
                let span = Span::new(s.start + m.span.start, s.start + m.span.end);
                g.record(m.term, &doc.uid, span);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment;
    use workbench_core::DocFormat;

    fn doc(serial: u64, text: &str) -> DocumentArtifact {
        DocumentArtifact {
            uid: Uid::new("doc", serial).unwrap(),
            title: "t".into(),
            text: text.into(),
            format: DocFormat::PlainText,
            sentences: segment(text, DocFormat::PlainText),
        }
    }

    #[test]
    fn counts_repeated_terms_with_spans() {
        let d = doc(
            1,
            "The camera shall send data to the processing unit. The processing unit shall store data.",
        );
        let g = build_glossary([&d], &Lexicon::default());
        let e = g.get("processing unit").unwrap();
        assert_eq!(e.count, 2);
        for (uid, span) in &e.spans {
            assert_eq!(uid, &d.uid);
            assert_eq!(d.slice(*span).unwrap(), "processing unit");
        }
        assert_eq!(g.count("data"), 2);
        assert_eq!(g.count("camera"), 1);
    }

    #[test]
    fn stopword_document_is_empty() {
        let d = doc(1, "It is what it is. And so it was.");
        assert!(build_glossary([&d], &Lexicon::default()).is_empty());
    }

    #[test]
    fn ranking_is_by_count() {
        let d = doc(1, "Battery and radio. Battery only.");
        let g = build_glossary([&d], &Lexicon::default());
        assert_eq!(g.ranked()[0], ("battery", 2));
    }
}
