//! Verification over a project snapshot.
//!
//! Phase 1 checks each interaction across modalities: placed geometry,
//! supply/demand voltage ranges and the relational rule table keyed by
//! function tags. Phase 2 evaluates constraint statements with exact decimal
//! arithmetic and explores every component state machine.

pub mod behavior;
pub mod constraints;
pub mod dsl;
pub mod expr;
pub mod finding;
pub mod phase1;
pub mod report;

pub use behavior::{check_state_machine, replay_trace, BehaviorPolicy, Trace};
pub use constraints::{evaluate_constraints, model_constraints};
pub use dsl::{parse_constraint, parse_constraint_file, ConstraintSpec, DslError};
pub use finding::{Finding, Phase, Severity};
pub use phase1::{run_phase1, GeometrySource, Phase1Policy, RelationTable};
pub use report::{run_full_verification, VerificationReport, VerifyPolicy};
