use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use workbench_core::{Model, Uid};
use workbench_verify::dsl::evaluate;
use workbench_verify::{evaluate_constraints, parse_constraint, ConstraintSpec, Severity};

#[path = "support/machines.rs"]
mod machines;

#[test]
fn checker_matches_brute_force_enumeration() {
    machines::check_machines(0x5EED, 300).unwrap();
}

// ---- constraints ----------------------------------------------------------

#[test]
fn constraint_evaluation_matches_decimal_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let mut m = Model::new();
        let mut grams = Vec::new();
        let mut tagged = 0;
        for i in 0..rng.gen_range(0..12) {
            let u = m.add_component(&format!("P{i}"), None).unwrap();
            if rng.gen_bool(0.4) {
                m.add_tag(&u, "electronics").unwrap();
                tagged += 1;
            }
            if rng.gen_bool(0.85) {
                let g: i64 = rng.gen_range(1..5000);
                let text = if rng.gen_bool(0.5) {
                    format!("{g} g")
                } else {
                    format!("{} kg", Decimal::new(g, 3))
                };
                m.set_attribute(&u, "mass", text.parse().unwrap()).unwrap();
                grams.push(g);
            }
        }
        let limit_g: i64 = rng.gen_range(0..30000);
        let total: i64 = grams.iter().sum();
        let spec = parse_constraint(&format!("sum(*, mass) <= {} kg", Decimal::new(limit_g, 3))).unwrap();
        let ev = evaluate(&spec.ast, m.components.values()).unwrap();
        assert_eq!(ev.lhs.value, Decimal::new(total, 3));
        assert_eq!(ev.holds, total <= limit_g);
        assert_eq!(ev.missing.len(), m.components.len() - grams.len());

        let scaled = parse_constraint(&format!("2 * sum(*, mass) - 500 g < {limit_g} g")).unwrap();
        let ev = evaluate(&scaled.ast, m.components.values()).unwrap();
        assert_eq!(ev.holds, 2 * total - 500 < limit_g);

        if let Some(&mx) = grams.iter().max() {
            let spec = parse_constraint(&format!("max(*, mass) >= {limit_g} g")).unwrap();
            assert_eq!(evaluate(&spec.ast, m.components.values()).unwrap().holds, mx >= limit_g);
        }
        let count = parse_constraint(&format!("count(tag:electronics) == {}", tagged % 3)).unwrap();
        assert_eq!(
            evaluate(&count.ast, m.components.values()).unwrap().holds,
            tagged == tagged % 3
        );
    }
}

fn masses() -> impl Strategy<Value = Vec<Option<u32>>> {
    prop::collection::vec(prop::option::weighted(0.8, 1u32..3000), 0..8)
}

proptest! {
    #[test]
    fn adding_a_violated_constraint_keeps_existing_findings(ms in masses(), limit in 0u32..10000) {
        let mut m = Model::new();
        for (i, g) in ms.iter().enumerate() {
            let u = m.add_component(&format!("P{i}"), None).unwrap();
            if let Some(g) = g {
                m.set_attribute(&u, "mass", format!("{g} g").parse().unwrap()).unwrap();
            }
        }
        let a = m.add_constraint(&format!("sum(*, mass) <= {limit} g"), None).unwrap();
        let b = m.add_constraint("count(*) < 0", None).unwrap();
        let spec = |u: &Uid| ConstraintSpec::from_record(&m.constraints[u]).unwrap();
        let before = evaluate_constraints(&m, &[spec(&a)]);
        let after = evaluate_constraints(&m, &[spec(&a), spec(&b)]);
        for f in &before {
            prop_assert!(after.contains(f));
        }
        prop_assert_eq!(after.iter().filter(|f| f.severity == Severity::Error).count(),
            before.iter().filter(|f| f.severity == Severity::Error).count() + 1);
    }
}
