use nalgebra::{Matrix4, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::layout::Vec3;

/// Model-to-world similarity: `world = translation + scale * rotation(model)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneTransform {
    pub translation: Vec3,
    pub rotation: UnitQuaternion<f64>,
    pub scale: f64,
}

impl Default for SceneTransform {
    fn default() -> Self {
        SceneTransform {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapDirection {
    Left,
    Right,
}

/// Snap-turn increment.
pub const SNAP_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

fn finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Smallest rotation taking direction `from` onto direction `to`.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> UnitQuaternion<f64> {
    let a = from.normalize();
    let b = to.normalize();
    let axis = a.cross(&b);
    let sin = axis.norm();
    let cos = a.dot(&b);
    if sin <= 1e-15 {
        if cos > 0.0 {
            return UnitQuaternion::identity();
        }
        // Antiparallel: half turn about any axis perpendicular to `a`.
        let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let perp = Unit::new_normalize(a.cross(&helper));
        return UnitQuaternion::from_axis_angle(&perp, std::f64::consts::PI);
    }
    UnitQuaternion::from_axis_angle(&Unit::new_unchecked(axis / sin), sin.atan2(cos))
}

impl SceneTransform {
    pub fn apply(&self, model: &Vec3) -> Vec3 {
        self.translation + (self.rotation * model) * self.scale
    }

    /// Homogeneous model-to-world matrix.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = self.rotation.to_homogeneous();
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] *= self.scale;
            }
            m[(r, 3)] = self.translation[r];
        }
        m
    }

    /// Applies the world-space similarity `x -> pivot_to + factor * q(x - pivot_from)`
    /// after this transform.
    fn then_about(&self, pivot_from: &Vec3, pivot_to: &Vec3, q: &UnitQuaternion<f64>, factor: f64) -> Self {
        SceneTransform {
            translation: pivot_to + (q * (self.translation - pivot_from)) * factor,
            rotation: q * self.rotation,
            scale: self.scale * factor,
        }
    }

    pub fn translate(&self, delta: &Vec3) -> Result<Self, SceneError> {
        if !finite(delta) {
            return Err(SceneError::NonFinite("translation delta"));
        }
        Ok(SceneTransform {
            translation: self.translation + delta,
            ..*self
        })
    }

    /// Grab-with-both-hands update from hand positions `(l0, r0)` to `(l1, r1)`.
    ///
    /// Scales by the ratio of hand separations and rotates by the minimal
    /// rotation between the two hand axes, both about the initial midpoint,
    /// which is then carried to the final midpoint.
    pub fn two_hand(&self, l0: &Vec3, r0: &Vec3, l1: &Vec3, r1: &Vec3) -> Result<Self, SceneError> {
        if ![l0, r0, l1, r1].into_iter().all(finite) {
            return Err(SceneError::NonFinite("hand position"));
        }
        let before = r0 - l0;
        let after = r1 - l1;
        let (d0, d1) = (before.norm(), after.norm());
        if d0 == 0.0 {
            return Err(SceneError::CoincidentHands);
        }
        if d1 == 0.0 {
            return Err(SceneError::DegenerateScale);
        }
        if l0 == l1 && r0 == r1 {
            return Ok(*self);
        }
        let factor = d1 / d0;
        let q = rotation_between(&before, &after);
        let m0 = (l0 + r0) * 0.5;
        let m1 = (l1 + r1) * 0.5;
        let next = self.then_about(&m0, &m1, &q, factor);
        if !(next.scale > 0.0 && next.scale.is_finite()) {
            return Err(SceneError::DegenerateScale);
        }
        Ok(next)
    }

    /// Turns the scene about the world up axis through the origin.
    ///
    /// A right snap turns the viewer clockwise seen from above, which the
    /// scene realises as the opposite (counter-clockwise) turn.
    pub fn snap(&self, direction: SnapDirection) -> Self {
        let angle = match direction {
            SnapDirection::Right => SNAP_ANGLE,
            SnapDirection::Left => -SNAP_ANGLE,
        };
        let q = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angle);
        let mut rotation = q * self.rotation;
        rotation.renormalize();
        SceneTransform {
            translation: q * self.translation,
            rotation,
            scale: self.scale,
        }
    }
}
