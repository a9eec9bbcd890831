use nalgebra::Point3;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::transform::Transform;

/// Axis-aligned bounding box in millimetres. A point-free product has the
/// distinguished `Empty` box rather than a degenerate one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aabb {
    Empty,
    Bounds { min: Point3<f64>, max: Point3<f64> },
}

impl Aabb {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        assert!(
            min.x <= max.x && min.y <= max.y && min.z <= max.z,
            "min must not exceed max"
        );
        Aabb::Bounds { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Self {
        points.into_iter().fold(Aabb::Empty, |acc, p| acc.include(p))
    }

    pub fn include(self, p: &Point3<f64>) -> Self {
        match self {
            Aabb::Empty => Aabb::Bounds { min: *p, max: *p },
            Aabb::Bounds { min, max } => Aabb::Bounds {
                min: min.inf(p),
                max: max.sup(p),
            },
        }
    }

    pub fn union(self, other: &Aabb) -> Self {
        match other {
            Aabb::Empty => self,
            Aabb::Bounds { min, max } => self.include(min).include(max),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Aabb::Empty)
    }

    pub fn min(&self) -> Option<Point3<f64>> {
        match self {
            Aabb::Empty => None,
            Aabb::Bounds { min, .. } => Some(*min),
        }
    }

    pub fn max(&self) -> Option<Point3<f64>> {
        match self {
            Aabb::Empty => None,
            Aabb::Bounds { max, .. } => Some(*max),
        }
    }

    /// Grows every face outward by `d` (negative values are not supported).
    pub fn inflate(&self, d: f64) -> Self {
        match self {
            Aabb::Empty => Aabb::Empty,
            Aabb::Bounds { min, max } => Aabb::Bounds {
                min: min.map(|c| c - d),
                max: max.map(|c| c + d),
            },
        }
    }

    /// Closed-box intersection: touching faces count.
    pub fn intersects(&self, other: &Aabb) -> bool {
        match (self, other) {
            (Aabb::Bounds { min: a0, max: a1 }, Aabb::Bounds { min: b0, max: b1 }) => {
                (0..3).all(|i| a0[i] <= b1[i] && b0[i] <= a1[i])
            }
            _ => false,
        }
    }

    pub fn contains_point(&self, p: &Point3<f64>) -> bool {
        match self {
            Aabb::Empty => false,
            Aabb::Bounds { min, max } => (0..3).all(|i| min[i] <= p[i] && p[i] <= max[i]),
        }
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        match other {
            Aabb::Empty => true,
            Aabb::Bounds { min, max } => self.contains_point(min) && self.contains_point(max),
        }
    }

    /// Euclidean distance between the boxes; zero when they touch or
    /// overlap, `None` if either is empty.
    pub fn gap(&self, other: &Aabb) -> Option<f64> {
        match (self, other) {
            (Aabb::Bounds { min: a0, max: a1 }, Aabb::Bounds { min: b0, max: b1 }) => {
                let sq: f64 = (0..3)
                    .map(|i| {
                        let d = (b0[i] - a1[i]).max(a0[i] - b1[i]).max(0.0);
                        d * d
                    })
                    .sum();
                Some(sq.sqrt())
            }
            _ => None,
        }
    }

    /// Box enclosing the eight transformed corners.
    pub fn transform(&self, t: &Transform) -> Self {
        match self {
            Aabb::Empty => Aabb::Empty,
            Aabb::Bounds { min, max } => {
                let mut out = Aabb::Empty;
                for i in 0..8 {
                    let c = Point3::new(
                        if i & 1 == 0 { min.x } else { max.x },
                        if i & 2 == 0 { min.y } else { max.y },
                        if i & 4 == 0 { min.z } else { max.z },
                    );
                    out = out.include(&t.apply(&c));
                }
                out
            }
        }
    }
}

impl Serialize for Aabb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Aabb::Empty => {
                let mut st = s.serialize_struct("Aabb", 2)?;
                st.serialize_field("empty", &true)?;
                st.serialize_field("unit", "mm")?;
                st.end()
            }
            Aabb::Bounds { min, max } => {
                let mut st = s.serialize_struct("Aabb", 4)?;
                st.serialize_field("empty", &false)?;
                st.serialize_field("max", &[max.x, max.y, max.z])?;
                st.serialize_field("min", &[min.x, min.y, min.z])?;
                st.serialize_field("unit", "mm")?;
                st.end()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(min: [f64; 3], max: [f64; 3]) -> Aabb {
        Aabb::new(Point3::from(min), Point3::from(max))
    }

    #[test]
    fn empty_is_distinguished() {
        assert_eq!(Aabb::from_points(&[]), Aabb::Empty);
        let single = Aabb::from_points(&[Point3::new(1.0, 2.0, 3.0)]);
        assert!(!single.is_empty());
        assert!(!Aabb::Empty.intersects(&single));
        assert_eq!(Aabb::Empty.gap(&single), None);
    }

    #[test]
    fn touching_faces_intersect() {
        let a = b([0.0; 3], [1.0; 3]);
        let c = b([1.0, 0.0, 0.0], [2.0, 1.0, 1.0]);
        assert!(a.intersects(&c));
        assert_eq!(a.gap(&c), Some(0.0));
    }

    #[test]
    fn gap_is_euclidean() {
        let a = b([0.0; 3], [1.0; 3]);
        let c = b([4.0, 5.0, 0.0], [5.0, 6.0, 1.0]);
        assert_eq!(a.gap(&c), Some(5.0));
        assert!(!a.inflate(3.9).intersects(&c));
        assert!(a.inflate(4.0).intersects(&c));
    }

    #[test]
    fn serializes_with_unit() {
        let v = serde_json::to_value(b([0.0; 3], [1.0; 3])).unwrap();
        assert_eq!(v["max"], serde_json::json!([1.0, 1.0, 1.0]));
        assert_eq!(v["unit"], "mm");
    }
}
