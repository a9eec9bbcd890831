//! Systems hub for the digital thread.
//!
//! Every requirement, component, document and geometry artifact gets a
//! persistent [`Uid`]. The [`Model`] keeps the typed payload for each uid, the
//! modality bindings that locate its data in the document, geometry and graph
//! stores, and the trace and interaction edges between nodes. [`store`] turns a
//! [`Project`] (model plus refinement journal) into a canonical JSON file.

pub mod error;
pub mod journal;
pub mod model;
pub mod project;
pub mod store;
pub mod uid;
pub mod units;

pub use error::{HubError, StoreError};
pub use journal::{EditOp, Journal, JournalEntry, RefinementEdit};
pub use model::*;
pub use project::{Direction, Edges, IntegrityReport, Model, NodePayload, Project, Resolved};
pub use uid::{Uid, UidRegistry};
pub use units::{Dimension, Measure, Quantity, Unit};
