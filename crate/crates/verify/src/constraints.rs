//! Phase 2 constraint evaluation over component attributes.

use serde_json::json;
use workbench_core::{Model, Uid};

use crate::dsl::{evaluate, ConstraintSpec, EvalIssue};
use crate::finding::{Finding, Phase, Severity};

pub const RULE_VIOLATED: &str = "constraint.violated";
pub const RULE_SATISFIED: &str = "constraint.satisfied";
pub const RULE_MISSING: &str = "constraint.missing-attribute";
pub const RULE_UNDEFINED: &str = "constraint.undefined";
pub const RULE_PARSE: &str = "constraint.parse-error";

fn subject(spec: &ConstraintSpec) -> Vec<Uid> {
    spec.uid.iter().cloned().collect()
}

pub fn evaluate_constraints(model: &Model, specs: &[ConstraintSpec]) -> Vec<Finding> {
    let mut out = Vec::new();
    for spec in specs {
        let f = |sev, rule, subjects, msg: String| Finding::new(Phase::Phase2Constraint, sev, rule, subjects, msg);
        match evaluate(&spec.ast, model.components.values()) {
            Ok(ev) => {
                for (uid, attr) in &ev.missing {
                    let mut s = subject(spec);
                    s.push(uid.clone());
                    out.push(f(
                        Severity::Warning,
                        RULE_MISSING,
                        s,
                        format!(
                            "{} has no `{attr}`; left out of `{}`",
                            model.components[uid].name, spec.text
                        ),
                    ));
                }
                let evidence = json!({
                    "lhs": ev.lhs.to_string(),
                    "rhs": ev.rhs.to_string(),
                    "op": spec.ast.op.symbol(),
                    "contributing": ev.contributing,
                });
                let (sev, rule, verb) = if ev.holds {
                    (Severity::Info, RULE_SATISFIED, "holds")
                } else {
                    (Severity::Error, RULE_VIOLATED, "is violated")
                };
                let mut s = subject(spec);
                if !ev.holds {
                    s.extend(ev.contributing.iter().cloned());
                }
                out.push(
                    f(
                        sev,
                        rule,
                        s,
                        format!("`{}` {verb}: {} {} {}", spec.text, ev.lhs, spec.ast.op.symbol(), ev.rhs),
                    )
                    .with_evidence(evidence),
                );
            }
            Err(EvalIssue::Unresolved(why) | EvalIssue::Undefined(why)) => {
                out.push(f(
                    Severity::Warning,
                    RULE_UNDEFINED,
                    subject(spec),
                    format!("`{}` cannot be evaluated: {why}", spec.text),
                ));
            }
        }
    }
    out
}

/// Parses the model's stored constraints. Statements that no longer parse
/// become Error findings.
pub fn model_constraints(model: &Model) -> (Vec<ConstraintSpec>, Vec<Finding>) {
    let mut specs = Vec::new();
    let mut bad = Vec::new();
    for r in model.constraints.values() {
        match ConstraintSpec::from_record(r) {
            Ok(s) => specs.push(s),
            Err(e) => bad.push(Finding::new(
                Phase::Phase2Constraint,
                Severity::Error,
                RULE_PARSE,
                vec![r.uid.clone()],
                format!("`{}`: {e}", r.text),
            )),
        }
    }
    (specs, bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_constraint;

    fn model(masses: &[Option<&str>]) -> Model {
        let mut m = Model::new();
        for (i, mass) in masses.iter().enumerate() {
            let u = m.add_component(&format!("P{i}"), None).unwrap();
            if let Some(v) = mass {
                m.set_attribute(&u, "mass", v.parse().unwrap()).unwrap();
            }
        }
        m
    }

    fn spec(m: &mut Model, text: &str) -> ConstraintSpec {
        let uid = m.add_constraint(text, None).unwrap();
        ConstraintSpec::from_record(&m.constraints[&uid]).unwrap()
    }

    #[test]
    fn info_error_and_warning() {
        let mut m = model(&[Some("1.2 kg"), Some("0.8 kg"), Some("1.5 kg")]);
        let ok = spec(&mut m, "sum(*, mass) <= 4.0 kg");
        let f = evaluate_constraints(&m, std::slice::from_ref(&ok));
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].severity, f[0].rule.as_str()), (Severity::Info, RULE_SATISFIED));
        let tight = spec(&mut m, "sum(*, mass) <= 3.0 kg");
        let f = evaluate_constraints(&m, &[tight]);
        assert_eq!(f[0].severity, Severity::Error);
        assert_eq!(f[0].evidence["lhs"], "3.5 kg");
        assert_eq!(f[0].subjects.len(), 4);

        let mut m = model(&[Some("1.2 kg"), None]);
        let s = spec(&mut m, "sum(*, mass) <= 4.0 kg");
        let f = evaluate_constraints(&m, &[s]);
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].severity, Severity::Warning);
        assert!(f[0].message.contains("P1"));
        assert_eq!(f[1].evidence["lhs"], "1.2 kg");
    }

    #[test]
    fn unparsable_record_is_an_error() {
        let mut m = Model::new();
        m.add_constraint("sum(*, mass) <= 4 W", None).unwrap();
        let (specs, bad) = model_constraints(&m);
        assert!(specs.is_empty());
        assert_eq!(bad[0].rule, RULE_PARSE);
        assert!(parse_constraint("sum(*, mass) <= 4 kg").is_ok());
    }
}
