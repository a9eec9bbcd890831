//! Workflow stages shared by the command line and the HTTP service: ingest,
//! extract, synthesize, edit, design data, geometry registration and
//! verification over a project file.

pub mod design;
pub mod error;
pub mod stages;

pub use design::{apply_design, ComponentSheet, DesignSheet, DesignSummary, MachineSheet};
pub use error::WorkflowError;
pub use stages::{
    edit, extract, format_for, ingest_bytes, ingest_file, load_constraints, load_policy, make_adapter, parse_json,
    project_dir, read_json, register_geometry, relative_path, synthesize, verify, AdapterChoice,
};
