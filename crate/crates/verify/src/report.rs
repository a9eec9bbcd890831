//! The full verification pass and its report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use workbench_core::store::{canonical_bytes, model_digest, sha256_hex};
use workbench_core::Model;

use crate::behavior::{check_state_machine, BehaviorPolicy};
use crate::constraints::{evaluate_constraints, model_constraints};
use crate::dsl::ConstraintSpec;
use crate::finding::{sort_findings, summarize, Finding, Phase, Severity};
use crate::phase1::{run_phase1, GeometrySource, Phase1Policy};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyPolicy {
    #[serde(flatten)]
    pub phase1: Phase1Policy,
    pub behavior: BehaviorPolicy,
}

pub const GEOMETRY_NOTE: &str =
    "geometry is approximated by axis-aligned boxes around each product's points; surfaces are not evaluated";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub findings: Vec<Finding>,
    pub summary: BTreeMap<String, usize>,
    pub model_digest: String,
    pub policy: VerifyPolicy,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn errors(&self) -> usize {
        self.count(Severity::Error)
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    /// Hash of the canonical JSON form.
    pub fn digest(&self) -> String {
        sha256_hex(&canonical_bytes(self))
    }

    /// CLI exit code: 0 without Errors, 1 with.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.errors() > 0)
    }
}

pub fn integrity_findings(model: &Model) -> Vec<Finding> {
    let r = model.validate_integrity();
    let mut out = Vec::new();
    for b in &r.dangling_bindings {
        out.push(Finding::new(
            Phase::Integrity,
            Severity::Error,
            "integrity.dangling-binding",
            vec![b.uid.clone()],
            format!("{:?} binding `{}` does not resolve", b.modality, b.locator),
        ));
    }
    for e in &r.dangling_edges {
        out.push(Finding::new(
            Phase::Integrity,
            Severity::Error,
            "integrity.dangling-edge",
            vec![e.src.clone(), e.dst.clone()],
            format!("trace {} -{:?}-> {} has a missing endpoint", e.src, e.kind, e.dst),
        ));
    }
    for i in &r.dangling_interactions {
        out.push(Finding::new(
            Phase::Integrity,
            Severity::Error,
            "integrity.dangling-interaction",
            vec![i.a.clone(), i.b.clone()],
            format!("{} interaction {} -> {} references a missing node", i.kind, i.a, i.b),
        ));
    }
    for u in &r.orphan_uids {
        out.push(Finding::new(
            Phase::Integrity,
            Severity::Warning,
            "integrity.orphan",
            vec![u.clone()],
            format!("{u} has no modality binding"),
        ));
    }
    out
}

/// Integrity, Phase 1, Phase 2 constraints, Phase 2 behavior. `extra` specs
/// are checked alongside the model's stored constraints.
pub fn run_full_verification(
    model: &Model,
    geometry: &GeometrySource,
    extra: &[ConstraintSpec],
    policy: &VerifyPolicy,
) -> VerificationReport {
    let mut findings = integrity_findings(model);
    findings.extend(run_phase1(model, geometry, &policy.phase1));
    let (mut specs, bad) = model_constraints(model);
    specs.extend(extra.iter().cloned());
    findings.extend(bad);
    findings.extend(evaluate_constraints(model, &specs));
    for sm in model.state_machines.values() {
        findings.extend(check_state_machine(sm, &policy.behavior));
    }
    sort_findings(&mut findings);
    log::info!("verification: {} findings", findings.len());
    VerificationReport {
        summary: summarize(&findings),
        findings,
        model_digest: model_digest(model),
        policy: policy.clone(),
        notes: vec![GEOMETRY_NOTE.to_string()],
    }
}
