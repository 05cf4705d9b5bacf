//! Shared geometric primitives: rigid transforms, planes, point clouds.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// 3D point/vector in millimetres.
pub type Vec3 = Vector3<f64>;
/// 3x3 rotation matrix.
pub type Mat3 = Matrix3<f64>;

/// Proper rigid transform: `x ↦ R·x + t` with `R` orthonormal, `det(R) = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Rotation of `angle` radians about the unit `axis` through `point`.
    pub fn about_axis(point: Vec3, axis: Vec3, angle: f64) -> Self {
        let rotation = rotation_about_axis(axis, angle);
        let translation = point - rotation * point;
        Self {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Rotates a direction vector (no translation).
    pub fn apply_vector(&self, v: Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Checks RᵀR = I and det(R) = 1 within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let err = (self.rotation.transpose() * self.rotation - Mat3::identity()).norm();
        err <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|c| c.is_finite())
    }

    /// Rotation angle in radians (0..=π).
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        c.acos()
    }
}

/// Rodrigues rotation about a unit axis.
pub fn rotation_about_axis(axis: Vec3, angle: f64) -> Mat3 {
    let a = axis.normalize();
    let (s, c) = angle.sin_cos();
    let k = Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0);
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

/// Minimal rotation carrying unit vector `from` onto unit vector `to`.
///
/// Falls back to a 180° rotation about an arbitrary perpendicular axis when
/// the vectors are anti-parallel.
pub fn minimal_rotation(from: Vec3, to: Vec3) -> Mat3 {
    let f = from.normalize();
    let t = to.normalize();
    let c = f.dot(&t).clamp(-1.0, 1.0);
    let axis = f.cross(&t);
    let s = axis.norm();
    if s < 1e-12 {
        if c > 0.0 {
            return Mat3::identity();
        }
        // anti-parallel: rotate π about any perpendicular
        let perp = any_perpendicular(f);
        return rotation_about_axis(perp, std::f64::consts::PI);
    }
    rotation_about_axis(axis / s, s.atan2(c))
}

/// A deterministic unit vector perpendicular to `v`.
pub fn any_perpendicular(v: Vec3) -> Vec3 {
    let n = v.normalize();
    let candidate = if n.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    (candidate - n * candidate.dot(&n)).normalize()
}

/// Oriented plane given by a point on it and a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    /// Normalizes the normal; returns `None` for a zero normal.
    pub fn new(point: Vec3, normal: Vec3) -> Option<Self> {
        let n = normal.norm();
        if n < 1e-12 {
            return None;
        }
        Some(Self {
            point,
            normal: normal / n,
        })
    }

    /// Signed distance of `p` from the plane, along the normal.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Default midsagittal plane: x = 0, normal +X.
    pub fn midsagittal() -> Self {
        Self {
            point: Vec3::zeros(),
            normal: Vec3::new(1.0, 0.0, 0.0),
        }
    }
}

/// Unordered set of 3D points, optionally labelled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub label: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            label: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        if self.points.is_empty() {
            return Vec3::zeros();
        }
        self.points.iter().sum::<Vec3>() / self.points.len() as f64
    }

    pub fn transformed(&self, t: &RigidTransform) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| t.apply(*p)).collect(),
            label: self.label.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_matches_sequential_application() {
        let a = RigidTransform::about_axis(
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(0.0, 0.0, 1.0),
            0.7,
        );
        let b = RigidTransform::about_axis(
            Vec3::new(-1.0, 0.5, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            -1.2,
        );
        let p = Vec3::new(4.0, -2.0, 0.5);
        assert_relative_eq!(a.compose(&b).apply(p), a.apply(b.apply(p)), epsilon = 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let t = RigidTransform::about_axis(
            Vec3::new(0.3, -0.1, 2.0),
            Vec3::new(1.0, 1.0, 0.0).normalize(),
            2.1,
        );
        let p = Vec3::new(-3.0, 7.0, 1.0);
        assert_relative_eq!(t.inverse().apply(t.apply(p)), p, epsilon = 1e-12);
        assert!(t.is_valid(1e-9));
    }

    #[test]
    fn minimal_rotation_maps_from_to_to() {
        let f = Vec3::new(1.0, 0.2, -0.3).normalize();
        let t = Vec3::new(-0.5, 1.0, 0.1).normalize();
        assert_relative_eq!(minimal_rotation(f, t) * f, t, epsilon = 1e-12);
        // anti-parallel case still a proper rotation
        let r = minimal_rotation(f, -f);
        assert_relative_eq!(r * f, -f, epsilon = 1e-12);
        assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_angle_recovers_input() {
        let t = RigidTransform::about_axis(Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), 0.25);
        assert_relative_eq!(t.rotation_angle(), 0.25, epsilon = 1e-12);
    }
}
