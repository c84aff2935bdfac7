use serde::{Deserialize, Serialize};

use super::{SceneError, SceneState};
use crate::layout::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Validates a ray; the direction must already be unit length.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, SceneError> {
        if origin.iter().chain(direction.iter()).any(|c| !c.is_finite()) {
            return Err(SceneError::NonFinite("ray"));
        }
        if (direction.norm() - 1.0).abs() > 1e-6 {
            return Err(SceneError::InvalidRay);
        }
        Ok(Ray { origin, direction })
    }

    /// Normalizes `direction` first.
    pub fn towards(origin: Vec3, direction: Vec3) -> Result<Self, SceneError> {
        let len = direction.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(SceneError::InvalidRay);
        }
        Self::new(origin, direction / len)
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickHit {
    pub name: String,
    /// Display index of the hit node.
    pub index: usize,
    /// Ray parameter of the hit.
    pub t: f64,
}

/// Smallest positive ray parameter at which the ray is inside the
/// axis-aligned box `[lo, hi]`: the entry point, or the exit point when the
/// origin is already inside. Boundaries count as inside.
pub fn ray_box_entry(ray: &Ray, lo: &Vec3, hi: &Vec3) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for a in 0..3 {
        let o = ray.origin[a];
        let d = ray.direction[a];
        if d == 0.0 {
            if o < lo[a] || o > hi[a] {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo[a] - o) / d, (hi[a] - o) / d);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    if t_near > 0.0 {
        Some(t_near)
    } else if t_far > 0.0 {
        Some(t_far)
    } else {
        None
    }
}

impl SceneState {
    /// World-space box of a displayed node: edge `node_size * scale *
    /// presence`, centred on its transformed position, axis-aligned.
    pub fn node_box(&self, index: usize) -> (Vec3, Vec3) {
        let center = self.world_position(index);
        let half = 0.5 * self.node_size * self.transform.scale * self.presence(index);
        let h = Vec3::repeat(half);
        (center - h, center + h)
    }

    /// Nearest visible node hit by the ray; ties go to the lower index.
    pub fn pick_hit(&self, ray: &Ray) -> Option<PickHit> {
        let best = self.execution.min_by_key_indexed(self.display_len(), |i| {
            if !self.is_visible(i) {
                return None;
            }
            let (lo, hi) = self.node_box(i);
            // Positive finite doubles order like their bit patterns.
            ray_box_entry(ray, &lo, &hi).map(|t| (t.to_bits(), i))
        })?;
        let (bits, index) = best;
        Some(PickHit {
            name: self.pair.display[index].name.to_string(),
            index,
            t: f64::from_bits(bits),
        })
    }

    /// Name of the nearest visible node hit by the ray.
    pub fn pick(&self, ray: &Ray) -> Option<String> {
        self.pick_hit(ray).map(|h| h.name)
    }
}
