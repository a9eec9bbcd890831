//! First extraction stage: flag candidate requirement sentences.
//!
//! The baseline annotator is a whole-word modal matcher. External annotators
//! sit behind the same request/response contract and can be replayed from a
//! JSON-lines log keyed by the request digest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use workbench_core::store::{canonical_bytes, canonicalize, sha256_hex};
use workbench_core::{DocumentArtifact, Span, Uid};

use crate::error::DocError;
use crate::lexicon::modal_tokens;

pub const URL_ENV: &str = "WORKBENCH_EXTRACTOR_URL";
pub const KEY_ENV: &str = "WORKBENCH_EXTRACTOR_KEY";

/// Name the external service is addressed by in request digests, shared by
/// the live and replay adapters so that recorded logs replay.
pub const EXTERNAL_NAME: &str = "external";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub doc: Uid,
    pub span: Span,
    pub trigger: String,
    pub confidence: Decimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdapterMode {
    Baseline,
    ExternalReplay,
    ExternalLive,
}

impl std::str::FromStr for AdapterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(AdapterMode::Baseline),
            "replay" => Ok(AdapterMode::ExternalReplay),
            "live" => Ok(AdapterMode::ExternalLive),
            _ => Err(format!("unknown adapter `{s}` (expected baseline, replay or live)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceItem {
    pub index: usize,
    pub text: String,
}

/// What an external annotator is sent for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub adapter: String,
    /// sha-256 of the normalized document text.
    pub document: String,
    pub sentences: Vec<SentenceItem>,
}

impl AdapterRequest {
    pub fn for_document(doc: &DocumentArtifact) -> Self {
        AdapterRequest {
            adapter: EXTERNAL_NAME.to_string(),
            document: sha256_hex(doc.text.as_bytes()),
            sentences: doc
                .sentences
                .iter()
                .enumerate()
                .map(|(index, s)| SentenceItem {
                    index,
                    text: doc.slice(*s).unwrap_or_default().to_string(),
                })
                .collect(),
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(&canonical_bytes(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterCandidate {
    /// Index into the request's sentence list.
    pub sentence: usize,
    pub trigger: String,
    pub confidence: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub candidates: Vec<AdapterCandidate>,
}

fn jsonl_line(rec: &ReplayRecord) -> String {
    let v = canonicalize(serde_json::to_value(rec).expect("record serializes"));
    v.to_string() + "\n"
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub request_digest: String,
    pub response: Value,
}

/// Recorded external responses by request digest.
#[derive(Debug, Clone, Default)]
pub struct ReplayLog {
    records: BTreeMap<String, Value>,
}

impl ReplayLog {
    pub fn from_jsonl(text: &str) -> Result<Self, DocError> {
        let mut records = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: ReplayRecord =
                serde_json::from_str(line).map_err(|e| DocError::Adapter(format!("replay log line {}: {e}", n + 1)))?;
            records.insert(r.request_digest, r.response);
        }
        Ok(ReplayLog { records })
    }

    pub fn load(path: &Path) -> Result<Self, DocError> {
        let text = std::fs::read_to_string(path).map_err(|e| DocError::Adapter(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn insert(&mut self, digest: String, response: Value) {
        self.records.insert(digest, response);
    }

    pub fn get(&self, digest: &str) -> Option<&Value> {
        self.records.get(digest)
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|(d, r)| {
                let rec = ReplayRecord {
                    request_digest: d.clone(),
                    response: r.clone(),
                };
                jsonl_line(&rec)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LiveEndpoint {
    pub url: String,
    pub api_key: Option<String>,
    /// Append each exchange to this replay log.
    pub record_to: Option<PathBuf>,
}

impl LiveEndpoint {
    pub fn from_env() -> Result<Self, DocError> {
        let url = std::env::var(URL_ENV).map_err(|_| DocError::Adapter(format!("{URL_ENV} is not set")))?;
        Ok(LiveEndpoint {
            url,
            api_key: std::env::var(KEY_ENV).ok(),
            record_to: None,
        })
    }

    fn call(&self, req: &AdapterRequest) -> Result<Value, DocError> {
        let mut call = ureq::post(&self.url);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let value: Value = call
            .send_json(req)
            .and_then(|mut r| r.body_mut().read_json())
            .map_err(|e| DocError::Adapter(e.to_string()))?;
        if let Some(path) = &self.record_to {
            use std::io::Write;
            let rec = ReplayRecord {
                request_digest: req.digest(),
                response: value.clone(),
            };
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| DocError::Adapter(format!("{}: {e}", path.display())))?;
            f.write_all(jsonl_line(&rec).as_bytes())
                .map_err(|e| DocError::Adapter(format!("{}: {e}", path.display())))?;
        }
        Ok(value)
    }
}

#[derive(Debug, Clone)]
pub enum ExtractorAdapter {
    Baseline,
    Replay(ReplayLog),
    Live(LiveEndpoint),
}

impl ExtractorAdapter {
    pub fn name(&self) -> &'static str {
        match self {
            ExtractorAdapter::Baseline => "baseline",
            _ => EXTERNAL_NAME,
        }
    }

    pub fn mode(&self) -> AdapterMode {
        match self {
            ExtractorAdapter::Baseline => AdapterMode::Baseline,
            ExtractorAdapter::Replay(_) => AdapterMode::ExternalReplay,
            ExtractorAdapter::Live(_) => AdapterMode::ExternalLive,
        }
    }
}

/// Sentences holding a whole-word modal, each with its first modal as
/// trigger.
pub fn baseline_candidates(doc: &DocumentArtifact) -> Vec<CandidateSpan> {
    doc.sentences
        .iter()
        .filter_map(|s| {
            let text = doc.slice(*s)?;
            let (trigger, _) = modal_tokens(text).into_iter().next()?;
            Some(CandidateSpan {
                doc: doc.uid.clone(),
                span: *s,
                trigger,
                confidence: Decimal::ONE,
            })
        })
        .collect()
}

/// Checks an external response against the document and folds it into the
/// baseline: listed sentences are added or rescored, nothing is removed.
fn merge_response(doc: &DocumentArtifact, raw: &Value) -> Result<Vec<CandidateSpan>, DocError> {
    let resp: AdapterResponse =
        serde_json::from_value(raw.clone()).map_err(|e| DocError::Adapter(format!("malformed response: {e}")))?;
    let mut by_start: BTreeMap<usize, CandidateSpan> = baseline_candidates(doc)
        .into_iter()
        .map(|c| (c.span.start, c))
        .collect();
    for c in resp.candidates {
        let span = *doc
            .sentences
            .get(c.sentence)
            .ok_or_else(|| DocError::Adapter(format!("sentence index {} out of range", c.sentence)))?;
        let text = doc.slice(span).unwrap_or_default();
        let trigger = c.trigger.to_lowercase();
        if !modal_tokens(text).iter().any(|(m, _)| *m == trigger) {
            return Err(DocError::Adapter(format!(
                "trigger `{}` does not occur in sentence {}",
                c.trigger, c.sentence
            )));
        }
        if c.confidence < Decimal::ZERO || c.confidence > Decimal::ONE {
            return Err(DocError::Adapter(format!("confidence {} outside [0, 1]", c.confidence)));
        }
        by_start.insert(
            span.start,
            CandidateSpan {
                doc: doc.uid.clone(),
                span,
                trigger,
                confidence: c.confidence,
            },
        );
    }
    Ok(by_start.into_values().collect())
}

/// Candidate requirement sentences of `doc`, ordered by span start.
pub fn annotate_candidates(doc: &DocumentArtifact, adapter: &ExtractorAdapter) -> Result<Vec<CandidateSpan>, DocError> {
    match adapter {
        ExtractorAdapter::Baseline => Ok(baseline_candidates(doc)),
        ExtractorAdapter::Replay(log) => {
            let digest = AdapterRequest::for_document(doc).digest();
            let raw = log.get(&digest).ok_or(DocError::ReplayMiss(digest))?;
            merge_response(doc, raw)
        }
        ExtractorAdapter::Live(endpoint) => {
            let req = AdapterRequest::for_document(doc);
            log::info!("calling external annotator for {}", doc.uid);
            let raw = endpoint.call(&req)?;
            merge_response(doc, &raw)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::segment;
    use serde_json::json;
    use workbench_core::DocFormat;

    fn doc(text: &str) -> DocumentArtifact {
        DocumentArtifact {
            uid: Uid::new("doc", 1).unwrap(),
            title: "t".into(),
            text: text.into(),
            format: DocFormat::PlainText,
            sentences: segment(text, DocFormat::PlainText),
        }
    }

    #[test]
    fn camera_sentence_is_a_candidate() {
        let d = doc("The camera shall send data to the processing unit.");
        let c = annotate_candidates(&d, &ExtractorAdapter::Baseline).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].trigger, "shall");
        assert_eq!(c[0].span, d.sentences[0]);
        assert_eq!(c[0].confidence, Decimal::ONE);
    }

    #[test]
    fn marshall_is_not_a_modal() {
        let d = doc("Marshall Space Flight Center is in Huntsville.");
        assert!(annotate_candidates(&d, &ExtractorAdapter::Baseline).unwrap().is_empty());
    }

    fn replay_for(d: &DocumentArtifact, response: Value) -> ExtractorAdapter {
        let mut log = ReplayLog::default();
        log.insert(AdapterRequest::for_document(d).digest(), response);
        ExtractorAdapter::Replay(ReplayLog::from_jsonl(&log.to_jsonl()).unwrap())
    }

    #[test]
    fn replay_rescores_and_keeps_baseline() {
        let d = doc("The radio will transmit. Nothing here. The battery should charge.");
        let adapter = replay_for(
            &d,
            json!({"candidates": [{"sentence": 2, "trigger": "should", "confidence": 0.25}]}),
        );
        let c = annotate_candidates(&d, &adapter).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].confidence, Decimal::ONE);
        assert_eq!(c[1].confidence, Decimal::new(25, 2));
    }

    #[test]
    fn replay_rejects_spans_outside_the_document() {
        let d = doc("The radio will transmit. Nothing here.");
        for bad in [
            json!({"candidates": [{"sentence": 5, "trigger": "will", "confidence": 1}]}),
            json!({"candidates": [{"sentence": 1, "trigger": "will", "confidence": 1}]}),
            json!({"candidates": [{"sentence": 0, "trigger": "will", "confidence": 2}]}),
            json!({"unexpected": true}),
        ] {
            let r = annotate_candidates(&d, &replay_for(&d, bad.clone()));
            assert!(matches!(r, Err(DocError::Adapter(_))), "{bad}");
        }
    }

    #[test]
    fn replay_miss_is_reported() {
        let d = doc("The radio will transmit.");
        let other = doc("Something else shall happen.");
        let adapter = replay_for(&other, json!({"candidates": []}));
        assert!(matches!(
            annotate_candidates(&d, &adapter),
            Err(DocError::ReplayMiss(_))
        ));
    }

    #[test]
    fn adapter_mode_names() {
        assert_eq!("replay".parse::<AdapterMode>().unwrap(), AdapterMode::ExternalReplay);
        assert!("gpt".parse::<AdapterMode>().is_err());
    }
}
