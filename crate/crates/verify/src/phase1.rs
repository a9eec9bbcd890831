//! Cross-modal compatibility: geometry, operating ranges and connection types.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use workbench_core::store::sha256_hex;
use workbench_core::{parse_geometry_locator, Component, InteractionKind, Measure, Modality, Model, Quantity, Uid};
use workbench_geom::{compute_aabb, geometric_compatibility, parse_step, GeoPolicy, GeoRule, PlacedPart, StepModel};

use crate::finding::{Finding, Phase, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Allow,
    Forbid,
}

/// One row of the relational table. Tags are unordered: the rule applies when
/// one endpoint carries `a` and the other carries `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationRule {
    pub a: String,
    pub b: String,
    pub kind: InteractionKind,
    pub verdict: Verdict,
}

/// Rules are tried in order and the first match decides; an interaction no
/// rule matches is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationTable(pub Vec<RelationRule>);

impl Default for RelationTable {
    fn default() -> Self {
        serde_json::from_str(include_str!("../data/relations.json")).expect("bundled relation table")
    }
}

impl RelationTable {
    pub fn decide(&self, x: &Component, y: &Component, kind: InteractionKind) -> Option<(usize, &RelationRule)> {
        let has = |c: &Component, t: &str| c.function_tags.contains(t);
        self.0
            .iter()
            .enumerate()
            .find(|(_, r)| r.kind == kind && ((has(x, &r.a) && has(y, &r.b)) || (has(y, &r.a) && has(x, &r.b))))
    }
}

/// Parsed STEP files of a project, keyed by geometry uid.
#[derive(Debug, Clone, Default)]
pub struct GeometrySource {
    pub models: BTreeMap<Uid, StepModel>,
    /// Problems met while loading; reported with the Phase 1 findings.
    pub findings: Vec<Finding>,
}

impl GeometrySource {
    /// Reads every registered geometry file relative to `base_dir`. A digest
    /// that no longer matches the registration is a Warning; the file is
    /// still used.
    pub fn load(model: &Model, base_dir: &Path) -> Self {
        let mut src = GeometrySource::default();
        for g in model.geometry.values() {
            let path = base_dir.join(&g.path);
            let bytes = match std::fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    src.findings.push(Finding::new(
                        Phase::Phase1Geometric,
                        Severity::Warning,
                        "geo.unavailable",
                        vec![g.uid.clone()],
                        format!("cannot read {}: {e}", g.path),
                    ));
                    continue;
                }
            };
            let digest = sha256_hex(&bytes);
            if digest != g.digest {
                src.findings.push(
                    Finding::new(
                        Phase::Phase1Geometric,
                        Severity::Warning,
                        "geo.digest-mismatch",
                        vec![g.uid.clone()],
                        format!("{} changed since it was registered", g.path),
                    )
                    .with_evidence(json!({"registered": g.digest, "current": digest})),
                );
            }
            match parse_step(&bytes) {
                Ok(m) => {
                    src.models.insert(g.uid.clone(), m);
                }
                Err(e) => src.findings.push(Finding::new(
                    Phase::Phase1Geometric,
                    Severity::Error,
                    "geo.parse-error",
                    vec![g.uid.clone()],
                    format!("{}: {e}", g.path),
                )),
            }
        }
        src
    }

    /// Places a component's bound product in its file's root frame. Every
    /// file is taken to share one project frame.
    pub fn place(&self, model: &Model, component: &Uid) -> Result<PlacedPart, String> {
        let binding = model
            .binding(component, Modality::Geometry)
            .ok_or_else(|| "no geometry binding".to_string())?;
        let (file, product) =
            parse_geometry_locator(&binding.locator).ok_or_else(|| format!("bad locator `{}`", binding.locator))?;
        let art = model
            .geometry
            .values()
            .find(|g| g.file_name() == file || g.path == file)
            .ok_or_else(|| format!("no geometry file `{file}`"))?;
        let step = self
            .models
            .get(&art.uid)
            .ok_or_else(|| format!("{} is not loaded", art.path))?;
        let node = step
            .product_by_name(product)
            .ok_or_else(|| format!("no product `{product}` in {}", art.path))?;
        let world = step.world_transform(node.id).map_err(|e| e.to_string())?;
        let aabb = compute_aabb(step, node.id, true)
            .map_err(|e| e.to_string())?
            .transform(&world);
        let axis = step.world_axis(node.id).map_err(|e| e.to_string())?;
        Ok(PlacedPart {
            uid: component.clone(),
            aabb,
            axis,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phase1Policy {
    pub geometry: GeoPolicy,
    pub relations: RelationTable,
}

fn geo_rule_id(r: GeoRule) -> &'static str {
    match r {
        GeoRule::MissingContact => "geo.missing-contact",
        GeoRule::ClearanceViolation => "geo.clearance",
        GeoRule::AxisMisalignment => "geo.axis-misalignment",
    }
}

pub fn geometric_findings(model: &Model, geometry: &GeometrySource, policy: &GeoPolicy) -> Vec<Finding> {
    let mut out = geometry.findings.clone();
    let mut placed: BTreeMap<&Uid, Result<PlacedPart, String>> = BTreeMap::new();
    let mut unplaced: BTreeMap<Uid, String> = BTreeMap::new();
    let spatial: BTreeSet<(&Uid, &Uid)> = model
        .edges
        .interactions
        .iter()
        .filter(|i| i.kind == InteractionKind::Spatial)
        .flat_map(|i| [(&i.a, &i.b), (&i.b, &i.a)])
        .collect();
    for i in &model.edges.interactions {
        for end in [&i.a, &i.b] {
            placed.entry(end).or_insert_with(|| geometry.place(model, end));
        }
        let (pa, pb) = (&placed[&i.a], &placed[&i.b]);
        let (Ok(pa), Ok(pb)) = (pa, pb) else {
            for (end, p) in [(&i.a, pa), (&i.b, pb)] {
                if let Err(e) = p {
                    unplaced.insert(end.clone(), e.clone());
                }
            }
            continue;
        };
        let connected = spatial.contains(&(&i.a, &i.b));
        for g in geometric_compatibility(pa, pb, i.kind, connected, policy) {
            out.push(
                Finding::new(
                    Phase::Phase1Geometric,
                    Severity::Error,
                    geo_rule_id(g.rule),
                    vec![g.components.0.clone(), g.components.1.clone()],
                    format!(
                        "{} interaction between {} and {}: measured {} {} against {} {}",
                        i.kind,
                        name(model, &i.a),
                        name(model, &i.b),
                        g.measured,
                        g.unit.symbol(),
                        g.threshold,
                        g.unit.symbol()
                    ),
                )
                .with_evidence(json!({
                    "kind": i.kind,
                    "measured": g.measured.to_string(),
                    "threshold": g.threshold.to_string(),
                    "unit": g.unit.symbol(),
                })),
            );
        }
    }
    for (uid, why) in unplaced {
        out.push(Finding::new(
            Phase::Phase1Geometric,
            Severity::Warning,
            "geo.missing-geometry",
            vec![uid.clone()],
            format!("{} has interactions but no usable geometry: {why}", name(model, &uid)),
        ));
    }
    out
}

fn name<'a>(model: &'a Model, uid: &Uid) -> &'a str {
    model.components.get(uid).map_or("?", |c| c.name.as_str())
}

/// `<attr>_min`/`<attr>_max` when both are present, else `<attr>` as a
/// single-point interval.
pub fn interval(c: &Component, attr: &str) -> Option<(Quantity, Quantity)> {
    let lo = c.attributes.get(&format!("{attr}_min"));
    let hi = c.attributes.get(&format!("{attr}_max"));
    match (lo, hi) {
        (Some(l), Some(h)) => Some((*l, *h)),
        _ => c.attributes.get(attr).map(|q| (*q, *q)),
    }
}

pub fn functional_findings(model: &Model) -> Vec<Finding> {
    let mut out = Vec::new();
    for i in model
        .edges
        .interactions
        .iter()
        .filter(|i| i.kind == InteractionKind::Energy)
    {
        let (Some(sup), Some(con)) = (model.components.get(&i.a), model.components.get(&i.b)) else {
            continue;
        };
        let (Some(s), Some(d)) = (interval(sup, "supply"), interval(con, "demand")) else {
            continue;
        };
        let base = |q: Quantity| Measure::from(q).value;
        if base(s.0) <= base(d.0) && base(d.1) <= base(s.1) {
            continue;
        }
        out.push(
            Finding::new(
                Phase::Phase1Functional,
                Severity::Error,
                "func.supply-demand",
                vec![i.a.clone(), i.b.clone()],
                format!(
                    "{} demands {}..{} but {} supplies {}..{}",
                    con.name, d.0, d.1, sup.name, s.0, s.1
                ),
            )
            .with_evidence(json!({
                "supply": [s.0.to_string(), s.1.to_string()],
                "demand": [d.0.to_string(), d.1.to_string()],
            })),
        );
    }
    out
}

pub fn relational_findings(model: &Model, table: &RelationTable) -> Vec<Finding> {
    let mut out = Vec::new();
    for i in &model.edges.interactions {
        let (Some(x), Some(y)) = (model.components.get(&i.a), model.components.get(&i.b)) else {
            continue;
        };
        if let Some((n, rule)) = table.decide(x, y, i.kind) {
            if rule.verdict == Verdict::Forbid {
                out.push(
                    Finding::new(
                        Phase::Phase1Relational,
                        Severity::Error,
                        "rel.forbidden",
                        vec![i.a.clone(), i.b.clone()],
                        format!(
                            "{} interaction between {} ({}) and {} ({}) is not permitted",
                            i.kind, x.name, rule.a, y.name, rule.b
                        ),
                    )
                    .with_evidence(json!({"rule": n, "a": rule.a, "b": rule.b, "kind": i.kind})),
                );
            }
        }
    }
    out
}

pub fn run_phase1(model: &Model, geometry: &GeometrySource, policy: &Phase1Policy) -> Vec<Finding> {
    let mut out = geometric_findings(model, geometry, &policy.geometry);
    out.extend(functional_findings(model));
    out.extend(relational_findings(model, &policy.relations));
    crate::finding::sort_findings(&mut out);
    out
}
