use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::StepError;

pub const RIGIDITY_TOLERANCE: f64 = 1e-6;

/// Rigid placement `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Transform {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Transform {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Rotation about an axis through the origin, angle in radians.
    pub fn rotation(axis: Vector3<f64>, angle: f64) -> Self {
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Transform {
            rotation: *rot.matrix(),
            translation: Vector3::zeros(),
        }
    }

    /// Local frame with origin `location`, z along `axis` and x towards
    /// `ref_direction` (projected onto the plane normal to `axis`).
    pub fn from_placement(
        location: Vector3<f64>,
        axis: Option<Vector3<f64>>,
        ref_direction: Option<Vector3<f64>>,
    ) -> Option<Self> {
        let z = axis.unwrap_or(Vector3::z()).try_normalize(1e-12)?;
        let r = ref_direction.unwrap_or(Vector3::x());
        let x = (r - z * r.dot(&z)).try_normalize(1e-12)?;
        let y = z.cross(&x);
        Some(Transform {
            rotation: Matrix3::from_columns(&[x, y, z]),
            translation: location,
        })
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &Transform) -> Transform {
        Transform {
            rotation: next.rotation * self.rotation,
            translation: next.rotation * self.translation + next.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Largest deviation from orthonormality, and from determinant +1.
    pub fn rigidity_error(&self) -> f64 {
        let ortho = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        ortho.max((self.rotation.determinant() - 1.0).abs())
    }

    pub fn is_rigid(&self) -> bool {
        self.rigidity_error() <= RIGIDITY_TOLERANCE
    }

    pub fn approx_eq(&self, other: &Transform, eps: f64) -> bool {
        (self.rotation - other.rotation).amax() <= eps && (self.translation - other.translation).amax() <= eps
    }
}

/// Composes a chain in application order: `chain[0]` is applied first.
pub fn compose_transforms(chain: &[Transform]) -> Result<Transform, StepError> {
    let mut acc = Transform::identity();
    for (i, t) in chain.iter().enumerate() {
        if !t.is_rigid() {
            return Err(StepError::NonRigid(format!(
                "chain element {i} deviates by {:.3e}",
                t.rigidity_error()
            )));
        }
        acc = acc.then(t);
    }
    Ok(acc)
}
