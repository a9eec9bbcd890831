use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use workbench_core::Uid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Referential problems found before any rule runs.
    Integrity,
    Phase1Geometric,
    Phase1Functional,
    Phase1Relational,
    Phase2Constraint,
    Phase2Behavior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub phase: Phase,
    pub severity: Severity,
    pub rule: String,
    pub subjects: Vec<Uid>,
    pub message: String,
    #[serde(default)]
    pub evidence: Value,
}

impl Finding {
    pub fn new(phase: Phase, severity: Severity, rule: &str, subjects: Vec<Uid>, message: impl Into<String>) -> Self {
        Finding {
            phase,
            severity,
            rule: rule.to_string(),
            subjects,
            message: message.into(),
            evidence: Value::Null,
        }
    }

    pub fn with_evidence(mut self, evidence: Value) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Stable order: phase, rule, subjects, message.
pub fn sort_findings(findings: &mut [Finding]) {
    findings
        .sort_by(|a, b| (a.phase, &a.rule, &a.subjects, &a.message).cmp(&(b.phase, &b.rule, &b.subjects, &b.message)));
}

pub fn summarize(findings: &[Finding]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in findings {
        *out.entry(format!("{:?}/{:?}", f.phase, f.severity)).or_insert(0) += 1;
    }
    out
}
