//! Reader for ISO 10303-21 clear-text exchange files, reduced to what the
//! verifier needs: product structure, rigid placements and per-product point
//! clouds with their bounding boxes.
//!
//! Geometry is approximated by the CARTESIAN_POINTs reachable from each
//! product's shape representations; surfaces are not evaluated.

pub mod aabb;
pub mod compat;
pub mod error;
pub mod lexer;
pub mod parser;
pub mod step;
pub mod transform;

pub use aabb::Aabb;
pub use compat::{geometric_compatibility, GeoFinding, GeoPolicy, GeoRule, GeoUnit, PlacedPart};
pub use error::{Position, StepError};
pub use step::{compute_aabb, parse_step, ProductNode, StepModel};
pub use transform::{compose_transforms, Transform};
