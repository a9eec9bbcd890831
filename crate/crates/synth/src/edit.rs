//! Human refinement edits and journal replay.

use std::collections::BTreeSet;

use workbench_core::{
    EditOp, HubError, Interaction, InteractionKind, Journal, Modality, Model, Project, RefinementEdit,
    RequirementStatus, TraceEdge, Uid,
};

use crate::error::SynthError;
use crate::identify::merge_interaction;

fn component(model: &Model, uid: &Uid) -> Result<(), SynthError> {
    if model.components.contains_key(uid) && model.uids.is_live(uid) {
        Ok(())
    } else {
        Err(SynthError::UnknownComponent(uid.clone()))
    }
}

fn set_status(model: &mut Model, uid: &Uid, to: RequirementStatus) -> Result<(), SynthError> {
    let r = model
        .requirements
        .get_mut(uid)
        .ok_or_else(|| SynthError::UnknownRequirement(uid.clone()))?;
    use RequirementStatus::*;
    let ok = match to {
        Accepted => r.status != Accepted,
        Rejected => r.status != Rejected,
        Modified => r.status != Rejected,
        Proposed => false,
    };
    if !ok {
        return Err(HubError::StatusTransition {
            uid: uid.clone(),
            from: r.status,
            to,
        }
        .into());
    }
    r.status = to;
    Ok(())
}

/// `col` feeds `row`. Spatial cells are symmetric and stored undirected.
fn set_cell(model: &mut Model, row: &Uid, col: &Uid, kind: InteractionKind) -> Result<(), SynthError> {
    component(model, row)?;
    component(model, col)?;
    if row == col {
        return Err(SynthError::InvalidEdit(format!("diagonal cell on {row}")));
    }
    let directed = kind != InteractionKind::Spatial;
    let exists = model.edges.interactions.iter().any(|i| {
        i.kind == kind && ((i.directed && &i.a == col && &i.b == row) || (!i.directed && i.connects(row, col)))
    });
    if !exists {
        model
            .edges
            .interactions
            .push(Interaction::new(col.clone(), row.clone(), kind, directed));
    }
    Ok(())
}

/// Removes whatever puts `kind` (or any kind) into cell (row, col): directed
/// `col -> row` interactions and undirected ones between the pair.
fn clear_cell(model: &mut Model, row: &Uid, col: &Uid, kind: Option<InteractionKind>) -> Result<(), SynthError> {
    component(model, row)?;
    component(model, col)?;
    model.edges.interactions.retain(|i| {
        let kind_hit = kind.is_none_or(|k| k == i.kind);
        let cell_hit = if i.directed {
            &i.a == col && &i.b == row
        } else {
            i.connects(row, col)
        };
        !(kind_hit && cell_hit)
    });
    Ok(())
}

fn remove_component(model: &mut Model, uid: &Uid) -> Result<(), SynthError> {
    component(model, uid)?;
    let parent = model.components[uid].parent.clone();
    let children: Vec<Uid> = model
        .components
        .values()
        .filter(|c| c.parent.as_ref() == Some(uid))
        .map(|c| c.uid.clone())
        .collect();
    for c in children {
        model.set_parent(&c, parent.clone())?;
    }
    model.edges.interactions.retain(|i| !i.touches(uid));
    for e in &mut model.edges.traces {
        if &e.src == uid || &e.dst == uid {
            e.flagged = true;
        }
    }
    model.remove_node(uid)?;
    Ok(())
}

fn merge_components(model: &mut Model, survivor: &Uid, absorbed: &Uid) -> Result<(), SynthError> {
    component(model, survivor)?;
    component(model, absorbed)?;
    if survivor == absorbed {
        return Err(SynthError::InvalidEdit(format!("cannot merge {survivor} into itself")));
    }
    let repoint = |u: &Uid| if u == absorbed { survivor.clone() } else { u.clone() };

    let old = std::mem::take(&mut model.edges.interactions);
    for i in old {
        let (a, b) = (repoint(&i.a), repoint(&i.b));
        if a == b {
            continue;
        }
        let mut n = Interaction::new(a, b, i.kind, i.directed);
        n.rationale = i.rationale;
        merge_interaction(&mut model.edges.interactions, n);
    }

    let old = std::mem::take(&mut model.edges.traces);
    let mut seen = BTreeSet::new();
    for e in old {
        let mut n = TraceEdge::new(repoint(&e.src), e.kind, repoint(&e.dst));
        n.flagged = e.flagged;
        if n.src == n.dst || !seen.insert((n.src.clone(), n.kind, n.dst.clone(), n.flagged)) {
            continue;
        }
        model.edges.traces.push(n);
    }

    let gone = model.components[absorbed].clone();
    {
        let s = model.components.get_mut(survivor).expect("checked");
        s.function_tags.extend(gone.function_tags.iter().cloned());
        for (k, v) in &gone.attributes {
            s.attributes.entry(k.clone()).or_insert(*v);
        }
    }
    let survivor_has_geometry = model.binding(survivor, Modality::Geometry).is_some();
    let moved_geometry = match (&gone.geometry_ref, survivor_has_geometry) {
        (Some(loc), false) => Some(loc.clone()),
        _ => None,
    };
    let children: Vec<Uid> = model
        .components
        .values()
        .filter(|c| c.parent.as_ref() == Some(absorbed))
        .map(|c| c.uid.clone())
        .collect();
    for c in children {
        if &c != survivor {
            model.set_parent(&c, Some(survivor.clone()))?;
        }
    }
    for sm in model.state_machines.values_mut() {
        if &sm.owner == absorbed {
            sm.owner = survivor.clone();
        }
    }
    model.remove_node(absorbed)?;
    if let Some(loc) = moved_geometry {
        model.link_geometry(survivor, &loc)?;
    }
    Ok(())
}

/// Applies one edit to the model without journaling it.
pub fn apply_op(model: &mut Model, op: &EditOp) -> Result<(), SynthError> {
    match op {
        EditOp::AddComponent {
            name,
            parent,
            function_tags,
        } => {
            if name.trim().is_empty() {
                return Err(SynthError::InvalidEdit("component name is empty".into()));
            }
            if let Some(p) = parent {
                component(model, p)?;
            }
            let uid = model.add_component(name.trim(), parent.clone())?;
            for t in function_tags {
                model.add_tag(&uid, t)?;
            }
        }
        EditOp::RemoveComponent { uid } => remove_component(model, uid)?,
        EditOp::RenameComponent { uid, name } => {
            component(model, uid)?;
            if name.trim().is_empty() {
                return Err(SynthError::InvalidEdit("component name is empty".into()));
            }
            model.rename_component(uid, name.trim())?;
        }
        EditOp::MergeComponents { survivor, absorbed } => merge_components(model, survivor, absorbed)?,
        EditOp::SetCell { row, col, kind } => set_cell(model, row, col, *kind)?,
        EditOp::ClearCell { row, col, kind } => clear_cell(model, row, col, *kind)?,
        EditOp::AcceptRequirement { uid } => set_status(model, uid, RequirementStatus::Accepted)?,
        EditOp::RejectRequirement { uid } => set_status(model, uid, RequirementStatus::Rejected)?,
        EditOp::EditRequirementText { uid, text } => {
            if text.trim().is_empty() {
                return Err(SynthError::InvalidEdit("requirement text is empty".into()));
            }
            set_status(model, uid, RequirementStatus::Modified)?;
            model.requirements.get_mut(uid).expect("checked").text = text.clone();
        }
    }
    Ok(())
}

/// Applies an edit and appends it to the journal. A failing edit leaves the
/// project untouched.
pub fn apply_edit(project: &mut Project, edit: RefinementEdit) -> Result<(), SynthError> {
    let mut next = project.model.clone();
    apply_op(&mut next, &edit.op)?;
    project.model = next;
    project.record_edit(edit);
    Ok(())
}

/// The model obtained by replaying the edits since the last checkpoint over
/// the journal snapshot.
pub fn replay_journal(journal: &Journal) -> Result<Model, SynthError> {
    let mut model = journal.snapshot.as_deref().cloned().unwrap_or_default();
    for edit in journal.pending_edits() {
        apply_op(&mut model, &edit.op)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsm::graph_to_dsm;
    use workbench_core::{DocFormat, Priority, ReqType, SourceRef, Span, TraceKind};

    fn edit(op: EditOp) -> RefinementEdit {
        RefinementEdit::new(op, "test", 0)
    }

    fn four_node() -> (Project, Vec<Uid>) {
        let mut p = Project::new();
        let m = &mut p.model;
        let ids: Vec<Uid> = ["Camera", "Processor", "Processing Unit", "Battery"]
            .iter()
            .map(|n| m.add_component(n, None).unwrap())
            .collect();
        let push = |m: &mut Model, a: usize, b: usize, k, d| {
            m.edges
                .interactions
                .push(Interaction::new(ids[a].clone(), ids[b].clone(), k, d))
        };
        push(m, 0, 1, InteractionKind::Information, true);
        push(m, 0, 2, InteractionKind::Information, true);
        push(m, 3, 2, InteractionKind::Energy, true);
        push(m, 1, 2, InteractionKind::Information, true);
        p.checkpoint("synthesize");
        (p, ids)
    }

    #[test]
    fn add_component_grows_dsm() {
        let (mut p, _) = four_node();
        let before = graph_to_dsm(&p.model, None).unwrap();
        apply_edit(
            &mut p,
            edit(EditOp::AddComponent {
                name: "Thermal Control".into(),
                parent: None,
                function_tags: BTreeSet::new(),
            }),
        )
        .unwrap();
        let after = graph_to_dsm(&p.model, None).unwrap();
        assert_eq!(after.order.len(), before.order.len() + 1);
        assert_eq!(after.cells, before.cells);
    }

    #[test]
    fn set_then_clear_is_identity() {
        let (mut p, ids) = four_node();
        let model0 = p.model.clone();
        let len0 = p.journal.len();
        let (row, col) = (ids[0].clone(), ids[3].clone());
        apply_edit(
            &mut p,
            edit(EditOp::SetCell {
                row: row.clone(),
                col: col.clone(),
                kind: InteractionKind::Energy,
            }),
        )
        .unwrap();
        assert_ne!(p.model, model0);
        apply_edit(&mut p, edit(EditOp::ClearCell { row, col, kind: None })).unwrap();
        assert_eq!(p.model, model0);
        assert_eq!(p.journal.len(), len0 + 2);
    }

    #[test]
    fn merge_repoints_without_self_loops() {
        let (mut p, ids) = four_node();
        apply_edit(
            &mut p,
            edit(EditOp::MergeComponents {
                survivor: ids[2].clone(),
                absorbed: ids[1].clone(),
            }),
        )
        .unwrap();
        let m = &p.model;
        assert!(!m.components.contains_key(&ids[1]));
        assert!(m.edges.interactions.iter().all(|i| i.a != i.b && !i.touches(&ids[1])));
        // camera->processor and camera->processing unit collapse; processor->unit vanishes
        let keys: BTreeSet<_> = m
            .edges
            .interactions
            .iter()
            .map(|i| (i.a.clone(), i.b.clone(), i.kind))
            .collect();
        assert_eq!(
            keys,
            BTreeSet::from([
                (ids[0].clone(), ids[2].clone(), InteractionKind::Information),
                (ids[3].clone(), ids[2].clone(), InteractionKind::Energy),
            ])
        );
        assert!(
            m.validate_integrity().is_clean(),
            "{}",
            m.validate_integrity().summary()
        );
    }

    #[test]
    fn remove_clears_interactions_and_flags_traces() {
        let (mut p, ids) = four_node();
        let doc = p
            .model
            .add_document(
                "d",
                "The camera shall work.".into(),
                DocFormat::PlainText,
                vec![Span::new(0, 22)],
            )
            .unwrap();
        let r = p
            .model
            .add_requirement(
                "The camera shall work.",
                ReqType::Functional,
                Priority::High,
                SourceRef {
                    doc,
                    span: Span::new(0, 22),
                },
            )
            .unwrap();
        p.model.add_trace(&ids[0], TraceKind::Satisfies, &r).unwrap();
        apply_edit(&mut p, edit(EditOp::RemoveComponent { uid: ids[0].clone() })).unwrap();
        let m = &p.model;
        assert!(m.edges.interactions.iter().all(|i| !i.touches(&ids[0])));
        let t = m.edges.traces.iter().find(|e| e.src == ids[0]).unwrap();
        assert!(t.flagged);
        assert!(m.validate_integrity().is_clean());
    }

    #[test]
    fn unknown_uids_and_sibling_clash_fail_cleanly() {
        let (mut p, ids) = four_node();
        let before = p.clone();
        let ghost = Uid::new("cmp", 99).unwrap();
        for op in [
            EditOp::RemoveComponent { uid: ghost.clone() },
            EditOp::SetCell {
                row: ghost.clone(),
                col: ids[0].clone(),
                kind: InteractionKind::Spatial,
            },
            EditOp::RenameComponent {
                uid: ids[0].clone(),
                name: "battery".into(),
            },
            EditOp::AcceptRequirement {
                uid: Uid::new("req", 0).unwrap(),
            },
        ] {
            assert!(apply_edit(&mut p, edit(op)).is_err());
        }
        assert_eq!(p, before);
    }

    #[test]
    fn replay_reproduces_model() {
        let (mut p, ids) = four_node();
        for op in [
            EditOp::SetCell {
                row: ids[1].clone(),
                col: ids[3].clone(),
                kind: InteractionKind::Energy,
            },
            EditOp::RenameComponent {
                uid: ids[1].clone(),
                name: "OBC".into(),
            },
            EditOp::AddComponent {
                name: "Radio".into(),
                parent: None,
                function_tags: BTreeSet::from(["comms".into()]),
            },
            EditOp::MergeComponents {
                survivor: ids[1].clone(),
                absorbed: ids[2].clone(),
            },
        ] {
            apply_edit(&mut p, edit(op)).unwrap();
        }
        assert_eq!(replay_journal(&p.journal).unwrap(), p.model);
    }
}
