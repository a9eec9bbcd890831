//! Design sheets: the engineering data that requirements do not carry.
//!
//! A sheet names components by their synthesized names and supplies
//! attributes, function tags, geometry links, constraint statements and
//! state machines. Applying a sheet twice gives the same model.
//!
//! ```json
//! {
//!   "geometry": ["cubesat.step"],
//!   "components": {
//!     "Camera": {
//!       "attributes": {"mass": "0.18 kg"},
//!       "tags": ["payload"],
//!       "geometry": "cubesat.step#PRODUCT'Camera'"
//!     }
//!   },
//!   "constraints": ["sum(*, mass) <= 1.33 kg"],
//!   "state_machines": {"OBC": {"states": ["Boot"], "initial": "Boot", "transitions": []}}
//! }
//! ```
//!
//! File paths, including the file part of geometry locators, are relative to
//! the sheet.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use workbench_core::{
    geometry_locator, parse_geometry_locator, Modality, Model, Project, Quantity, StateInvariant, StateMachine,
    Transition, Uid, VarDecl,
};
use workbench_verify::parse_constraint;

use crate::error::WorkflowError;
use crate::stages::{read_json, register_geometry, relative_path};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSheet {
    pub geometry: Vec<String>,
    pub components: BTreeMap<String, ComponentSheet>,
    pub constraints: Vec<String>,
    /// Keyed by owner component name. Replaces the owner's machine.
    pub state_machines: BTreeMap<String, MachineSheet>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComponentSheet {
    pub attributes: BTreeMap<String, Quantity>,
    pub tags: Vec<String>,
    pub geometry: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSheet {
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub final_states: Vec<String>,
    pub transitions: Vec<Transition>,
    #[serde(default)]
    pub variables: BTreeMap<String, VarDecl>,
    #[serde(default)]
    pub invariants: Vec<StateInvariant>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DesignSummary {
    pub geometry: Vec<Uid>,
    pub attributes: usize,
    pub constraints_added: Vec<Uid>,
    pub machines: Vec<Uid>,
}

impl DesignSheet {
    pub fn load(path: &Path) -> Result<Self, WorkflowError> {
        read_json(path)
    }
}

fn component_by_name(model: &Model, name: &str) -> Result<Uid, WorkflowError> {
    let mut hits = model.components.values().filter(|c| c.name.eq_ignore_ascii_case(name));
    match (hits.next(), hits.next()) {
        (Some(c), None) => Ok(c.uid.clone()),
        (None, _) => Err(WorkflowError::Design(format!("no component named `{name}`"))),
        (Some(_), Some(_)) => Err(WorkflowError::Design(format!("component name `{name}` is ambiguous"))),
    }
}

/// Applies `sheet` (read from `sheet_dir`) and checkpoints the result. On
/// error the project is unchanged.
pub fn apply_design(
    project: &mut Project,
    sheet: &DesignSheet,
    sheet_dir: &Path,
    project_dir: &Path,
) -> Result<DesignSummary, WorkflowError> {
    let mut work = project.clone();
    let mut summary = DesignSummary::default();

    let mut files: BTreeMap<&str, String> = BTreeMap::new();
    for f in &sheet.geometry {
        summary
            .geometry
            .push(register_geometry(&mut work, &sheet_dir.join(f), project_dir)?);
        files.insert(f.as_str(), relative_path(&sheet_dir.join(f), project_dir)?);
    }

    let model = &mut work.model;
    for (name, c) in &sheet.components {
        let uid = component_by_name(model, name)?;
        for (attr, q) in &c.attributes {
            model.set_attribute(&uid, attr, *q)?;
            summary.attributes += 1;
        }
        for t in &c.tags {
            model.add_tag(&uid, t)?;
        }
        if let Some(loc) = &c.geometry {
            let (file, product) = parse_geometry_locator(loc)
                .ok_or_else(|| WorkflowError::Design(format!("bad geometry locator `{loc}`")))?;
            let file = files.get(file).map_or(file, String::as_str);
            let loc = geometry_locator(file, product);
            if model.binding(&uid, Modality::Geometry).map(|b| b.locator.as_str()) != Some(loc.as_str()) {
                if model.binding(&uid, Modality::Geometry).is_some() {
                    model.unbind(&uid, Modality::Geometry)?;
                }
                model.link_geometry(&uid, &loc)?;
            }
        }
    }

    for text in &sheet.constraints {
        parse_constraint(text).map_err(|e| WorkflowError::Design(format!("`{text}`: {e}")))?;
        if !model.constraints.values().any(|c| c.text == *text) {
            summary.constraints_added.push(model.add_constraint(text, None)?);
        }
    }

    for (owner_name, m) in &sheet.state_machines {
        let owner = component_by_name(model, owner_name)?;
        let existing = model
            .state_machines
            .values()
            .find(|sm| sm.owner == owner)
            .map(|sm| sm.uid.clone());
        let machine = StateMachine {
            uid: existing.clone().unwrap_or_else(|| owner.clone()),
            owner,
            states: m.states.clone(),
            initial: m.initial.clone(),
            final_states: m.final_states.clone(),
            transitions: m.transitions.clone(),
            variables: m.variables.clone(),
            invariants: m.invariants.clone(),
        };
        let uid = match existing {
            Some(uid) => {
                machine
                    .check_structure()
                    .map_err(|e| WorkflowError::Design(format!("machine of `{owner_name}`: {e}")))?;
                model.state_machines.insert(uid.clone(), machine);
                uid
            }
            None => model.add_state_machine(machine)?,
        };
        summary.machines.push(uid);
    }

    if work.model != project.model {
        work.checkpoint("design");
    }
    *project = work;
    Ok(summary)
}
