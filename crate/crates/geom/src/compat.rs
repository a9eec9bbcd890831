//! Geometric compatibility between two placed parts.

use nalgebra::Vector3;
use rust_decimal::prelude::FromPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use workbench_core::{InteractionKind, Uid};

use crate::aabb::Aabb;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoPolicy {
    /// mm added to every face before the contact test.
    pub contact_tolerance: f64,
    /// mm required between parts that interact without touching.
    pub min_clearance: f64,
    /// degrees between primary axes of mated parts.
    pub max_axis_angle: f64,
}

impl Default for GeoPolicy {
    fn default() -> Self {
        GeoPolicy {
            contact_tolerance: 0.5,
            min_clearance: 1.0,
            max_axis_angle: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeoRule {
    ClearanceViolation,
    MissingContact,
    AxisMisalignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeoUnit {
    #[serde(rename = "mm")]
    Millimetre,
    #[serde(rename = "deg")]
    Degree,
}

impl GeoUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            GeoUnit::Millimetre => "mm",
            GeoUnit::Degree => "deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoFinding {
    pub rule: GeoRule,
    pub components: (Uid, Uid),
    pub measured: Decimal,
    pub threshold: Decimal,
    pub unit: GeoUnit,
}

/// A component's geometry in a common frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPart {
    pub uid: Uid,
    pub aabb: Aabb,
    pub axis: Option<Vector3<f64>>,
}

/// Six decimal places are far below any tolerance in play and keep the
/// report stable against last-bit float noise.
pub fn to_decimal(x: f64) -> Decimal {
    Decimal::from_f64(x).unwrap_or_default().round_dp(6).normalize()
}

/// Angle between two lines in degrees; orientation of either is ignored.
pub fn axis_angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> Option<f64> {
    let a = a.try_normalize(1e-12)?;
    let b = b.try_normalize(1e-12)?;
    Some(a.dot(&b).abs().min(1.0).acos().to_degrees())
}

/// Findings for one interaction. Parts with empty boxes produce none; the
/// caller decides how to report missing geometry.
pub fn geometric_compatibility(
    a: &PlacedPart,
    b: &PlacedPart,
    kind: InteractionKind,
    spatially_connected: bool,
    policy: &GeoPolicy,
) -> Vec<GeoFinding> {
    let mut out = Vec::new();
    let Some(gap) = a.aabb.gap(&b.aabb) else {
        return out;
    };
    let finding = |rule, measured: f64, threshold: f64, unit| GeoFinding {
        rule,
        components: (a.uid.clone(), b.uid.clone()),
        measured: to_decimal(measured),
        threshold: to_decimal(threshold),
        unit,
    };
    if kind == InteractionKind::Spatial {
        let tol = policy.contact_tolerance;
        if !a.aabb.inflate(tol).intersects(&b.aabb.inflate(tol)) {
            out.push(finding(GeoRule::MissingContact, gap, tol, GeoUnit::Millimetre));
        }
        if let (Some(x), Some(y)) = (&a.axis, &b.axis) {
            if let Some(angle) = axis_angle_deg(x, y) {
                if angle > policy.max_axis_angle {
                    out.push(finding(
                        GeoRule::AxisMisalignment,
                        angle,
                        policy.max_axis_angle,
                        GeoUnit::Degree,
                    ));
                }
            }
        }
    } else if !spatially_connected && gap < policy.min_clearance {
        out.push(finding(
            GeoRule::ClearanceViolation,
            gap,
            policy.min_clearance,
            GeoUnit::Millimetre,
        ));
    }
    out
}
