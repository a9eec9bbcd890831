//! The CubeSat scenario built through the library: clean project and seeded
//! faults. Shared with the acceptance suite.

use std::path::{Path, PathBuf};

use workbench_core::{Project, RefinementEdit};
use workbench_verify::{Phase, Severity, VerificationReport, VerifyPolicy};
use workbench_workflow::*;

pub const DOCS: [&str; 4] = ["mission.md", "avionics.md", "power.txt", "notes.txt"];

/// Fault file and the one Error it must produce.
pub const FAULTS: [(&str, Phase, &str); 5] = [
    (
        "budget_overflow.design.json",
        Phase::Phase2Constraint,
        "constraint.violated",
    ),
    (
        "supply_mismatch.design.json",
        Phase::Phase1Functional,
        "func.supply-demand",
    ),
    ("forbidden_pair.edit.json", Phase::Phase1Relational, "rel.forbidden"),
    (
        "missing_contact.design.json",
        Phase::Phase1Geometric,
        "geo.missing-contact",
    ),
    ("invariant_breach.design.json", Phase::Phase2Behavior, "sm.invariant"),
];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/cubesat")
}

/// Ingest, extract, synthesize, merge and design sheet, with geometry paths
/// stored relative to `dir`.
pub fn clean_project(dir: &Path) -> Project {
    let fx = fixtures();
    let mut p = Project::new();
    for d in DOCS {
        ingest_file(&mut p, &fx.join("docs").join(d), None).unwrap();
    }
    extract(&mut p, &make_adapter(AdapterChoice::Baseline, None).unwrap()).unwrap();
    synthesize(&mut p).unwrap();
    let merge: RefinementEdit = read_json(&fx.join("merge.edit.json")).unwrap();
    edit(&mut p, merge).unwrap();
    let sheet = DesignSheet::load(&fx.join("design.json")).unwrap();
    apply_design(&mut p, &sheet, &fx, dir).unwrap();
    p
}

/// Applies one file from `faults/` to a copy of `base`.
pub fn with_fault(base: &Project, file: &str, dir: &Path) -> Project {
    let faults = fixtures().join("faults");
    let mut p = base.clone();
    if file.ends_with(".edit.json") {
        edit(&mut p, read_json(&faults.join(file)).unwrap()).unwrap();
    } else {
        let sheet = DesignSheet::load(&faults.join(file)).unwrap();
        apply_design(&mut p, &sheet, &faults, dir).unwrap();
    }
    p
}

pub fn errors(r: &VerificationReport) -> Vec<(Phase, String)> {
    r.findings
        .iter()
        .filter(|f| f.severity == Severity::Error)
        .map(|f| (f.phase, f.rule.clone()))
        .collect()
}

pub fn run(p: &Project, dir: &Path) -> VerificationReport {
    verify(p, dir, &[], &VerifyPolicy::default())
}
