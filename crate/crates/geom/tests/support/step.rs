//! Expected product trees, boxes and error positions for the STEP fixtures.
//! Each check panics on mismatch. Shared with the acceptance suite.

use std::path::PathBuf;

use nalgebra::{Point3, Vector3};
use workbench_geom::{compute_aabb, parse_step, Aabb, StepError, StepModel};

pub const EPS: f64 = 1e-9;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/step")
        .join(name)
}

pub fn load(name: &str) -> Result<StepModel, StepError> {
    parse_step(&std::fs::read(fixture_path(name)).unwrap())
}

pub fn assert_box(b: Aabb, min: [f64; 3], max: [f64; 3]) {
    let (Some(lo), Some(hi)) = (b.min(), b.max()) else {
        panic!("expected a bounded box, got {b:?}");
    };
    assert!((lo - Point3::from(min)).amax() <= EPS, "min {lo} != {min:?}");
    assert!((hi - Point3::from(max)).amax() <= EPS, "max {hi} != {max:?}");
}

pub fn id_of(m: &StepModel, name: &str) -> u64 {
    m.product_by_name(name).unwrap().id
}

pub fn single_cube() {
    let m = load("cube.step").unwrap();
    assert_eq!(m.header.file_name, "cube.step");
    assert_eq!(m.products.len(), 1);
    let cube = &m.products[0];
    assert_eq!((cube.product_id.as_str(), cube.name.as_str()), ("CUBE", "Cube"));
    assert_eq!(cube.points.len(), 8);
    assert!(cube.children.is_empty());
    assert_box(compute_aabb(&m, cube.id, false).unwrap(), [0.0; 3], [1.0; 3]);
    assert_eq!(cube.primary_axis, Some(Vector3::z()));
    // unlifted types are kept
    assert!(m.entities[&90].is("PRODUCT_RELATED_PRODUCT_CATEGORY"));
}

pub fn two_part_assembly() {
    let m = load("assembly.step").unwrap();
    assert_eq!(m.products.len(), 2);
    let assy = m.product(id_of(&m, "Assembly")).unwrap();
    let cube = id_of(&m, "Cube");
    assert_eq!(assy.children.len(), 1);
    let (child, t) = &assy.children[0];
    assert_eq!(*child, cube);
    assert!((t.translation - Vector3::new(10.0, 0.0, 0.0)).amax() <= EPS);
    assert!((t.rotation - nalgebra::Matrix3::identity()).amax() <= EPS);
    assert_eq!(m.roots(), vec![assy.id]);

    assert_eq!(compute_aabb(&m, assy.id, false).unwrap(), Aabb::Empty);
    assert_box(
        compute_aabb(&m, assy.id, true).unwrap(),
        [10.0, 0.0, 0.0],
        [11.0, 1.0, 1.0],
    );
    assert_box(compute_aabb(&m, cube, true).unwrap(), [0.0; 3], [1.0; 3]);
}

pub fn rotated_sub_assembly() {
    let m = load("rotated.step").unwrap();
    assert_eq!(m.products.len(), 3);
    let root = id_of(&m, "Root");
    let sub = id_of(&m, "Bracket assembly");
    let plate = id_of(&m, "Plate");
    let tree: Vec<(u64, Vec<u64>)> = m
        .products
        .iter()
        .map(|p| (p.id, p.children.iter().map(|c| c.0).collect()))
        .collect();
    assert_eq!(tree, vec![(root, vec![sub]), (sub, vec![plate]), (plate, vec![])]);

    // plate (0..2, 0..1, 0..1) shifted by 5 in x inside the sub-assembly
    assert_box(compute_aabb(&m, sub, true).unwrap(), [5.0, 0.0, 0.0], [7.0, 1.0, 1.0]);
    // then (x, y) -> (-y, x) and shifted by 20 in y
    assert_box(
        compute_aabb(&m, root, true).unwrap(),
        [-1.0, 25.0, 0.0],
        [0.0, 27.0, 1.0],
    );

    let world = m.world_transform(plate).unwrap();
    let p = world.apply(&Point3::new(2.0, 1.0, 1.0));
    assert!((p - Point3::new(-1.0, 27.0, 1.0)).amax() <= EPS);
    // bore axis along plate x ends up along root y
    let axis = m.world_axis(plate).unwrap().unwrap();
    assert!((axis - Vector3::y()).amax() <= EPS, "{axis}");
}

pub fn unresolved_reference_fault() {
    match load("fault_unresolved.step").unwrap_err() {
        StepError::UnresolvedReference { target, from, pos } => {
            assert_eq!((target, from), (99, 26));
            assert_eq!((pos.line, pos.column), (22, 66));
        }
        other => panic!("{other:?}"),
    }
}

pub fn lexical_fault() {
    match load("fault_lexical.step").unwrap_err() {
        StepError::Lexical { pos, .. } => assert_eq!((pos.line, pos.column), (27, 34)),
        other => panic!("{other:?}"),
    }
}

pub fn syntax_fault() {
    match load("fault_syntax.step").unwrap_err() {
        StepError::Syntax { pos, .. } => assert_eq!((pos.line, pos.column), (25, 35)),
        other => panic!("{other:?}"),
    }
}

pub fn header_fault() {
    assert!(matches!(load("fault_header.step"), Err(StepError::MissingHeader(_))));
}

pub fn cycle_fault() {
    match load("fault_cycle.step").unwrap_err() {
        StepError::CyclicAssembly(cycle) => {
            assert_eq!(cycle.first(), cycle.last());
            let mut ids = cycle.clone();
            ids.sort();
            ids.dedup();
            assert_eq!(ids, vec![10, 20]);
        }
        other => panic!("{other:?}"),
    }
}

pub fn every_fixture_parses_or_reports_a_position() {
    for entry in std::fs::read_dir(fixture_path("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("step") {
            continue;
        }
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        match parse_step(&std::fs::read(&path).unwrap()) {
            Ok(_) => assert!(!name.starts_with("fault_"), "{name} should fail"),
            Err(e) => {
                assert!(name.starts_with("fault_"), "{name}: {e}");
                let positioned = matches!(
                    e,
                    StepError::Lexical { .. } | StepError::Syntax { .. } | StepError::UnresolvedReference { .. }
                );
                let structural = matches!(e, StepError::MissingHeader(_) | StepError::CyclicAssembly(_));
                assert!(positioned || structural, "{name}: {e}");
            }
        }
    }
}

/// Every check above, for callers that run them as one criterion.
#[allow(dead_code)]
pub fn check_all() {
    single_cube();
    two_part_assembly();
    rotated_sub_assembly();
    unresolved_reference_fault();
    lexical_fault();
    syntax_fault();
    header_fault();
    cycle_fault();
    every_fixture_parses_or_reports_a_position();
}
