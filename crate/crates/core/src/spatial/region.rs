use serde::{Deserialize, Serialize};

use super::{Pose, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    /// Outward unit normal.
    pub normal: Vec3,
    /// Points with `normal · p <= offset` are inside.
    pub offset: f64,
}

/// Bounded convex polytope in half-space form, expressed in some body frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexRegion {
    half_spaces: Vec<HalfSpace>,
}

const UNIT_TOL: f64 = 1e-9;

impl ConvexRegion {
    pub fn new(half_spaces: Vec<HalfSpace>) -> Result<Self> {
        if half_spaces.len() < 4 {
            return Err(Error::contract(format!(
                "convex region needs at least 4 half-spaces, got {}",
                half_spaces.len()
            )));
        }
        for h in &half_spaces {
            if !h.normal.is_finite() || !h.offset.is_finite() {
                return Err(Error::contract("non-finite half-space"));
            }
            if (h.normal.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::contract(format!(
                    "half-space normal {:?} is not unit length",
                    h.normal
                )));
            }
        }
        if let Some(dir) = unbounded_direction(&half_spaces) {
            return Err(Error::contract(format!("convex region is unbounded along {dir:?}")));
        }
        Ok(ConvexRegion { half_spaces })
    }

    /// Convex hull of a point cloud, as the set of its supporting face planes.
    ///
    /// Brute force over point triples; meant for the handful of points that
    /// describe a gripper envelope, not for large clouds.
    pub fn hull_of(points: &[Vec3]) -> Result<Self> {
        let scale = points.iter().map(|p| p.max_abs()).fold(1.0, f64::max);
        let eps = 1e-9 * scale;
        let mut planes: Vec<HalfSpace> = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for k in j + 1..points.len() {
                    let n = (points[j] - points[i]).cross(points[k] - points[i]);
                    let Some(n) = n.try_normalize(1e-12 * scale * scale) else {
                        continue;
                    };
                    let d = n.dot(points[i]);
                    let (mut above, mut below) = (false, false);
                    for p in points {
                        let s = n.dot(*p) - d;
                        above |= s > eps;
                        below |= s < -eps;
                    }
                    let normal = match (above, below) {
                        (false, _) => n,
                        (true, false) => -n,
                        (true, true) => continue,
                    };
                    let offset = normal.dot(points[i]);
                    let dup = planes
                        .iter()
                        .any(|h| (h.normal - normal).max_abs() < 1e-9 && (h.offset - offset).abs() < eps);
                    if !dup {
                        planes.push(HalfSpace { normal, offset });
                    }
                }
            }
        }
        ConvexRegion::new(planes)
    }

    pub fn half_spaces(&self) -> &[HalfSpace] {
        &self.half_spaces
    }

    /// Containment of a body-frame point, shrunk inward by `margin`.
    pub fn contains_local(&self, p: Vec3, margin: f64) -> bool {
        self.half_spaces.iter().all(|h| h.normal.dot(p) <= h.offset - margin)
    }

    /// Containment test for a world point with the region placed at `region_pose`.
    pub fn contains_point(&self, region_pose: &Pose, p_world: Vec3, margin: f64) -> bool {
        debug_assert!(margin >= 0.0);
        self.contains_local(region_pose.inverse_transform_point(p_world), margin)
    }

    /// Largest signed distance from `p` to any face plane (negative inside).
    pub fn max_violation_local(&self, p: Vec3) -> f64 {
        self.half_spaces
            .iter()
            .map(|h| h.normal.dot(p) - h.offset)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

// The recession cone {d : n_i·d <= 0 for all i} is non-trivial iff the region
// is unbounded. Its extreme rays lie on intersections of two bounding planes,
// i.e. along ±(n_i × n_j), so checking those candidates is exhaustive.
fn unbounded_direction(hs: &[HalfSpace]) -> Option<Vec3> {
    let mut candidates = Vec::new();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            if let Some(d) = hs[i].normal.cross(hs[j].normal).try_normalize(1e-12) {
                candidates.push(d);
                candidates.push(-d);
            }
        }
    }
    if candidates.is_empty() {
        // All normals parallel: any perpendicular direction escapes.
        let n = hs[0].normal;
        let any = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        return n.cross(any).try_normalize(0.0);
    }
    candidates
        .into_iter()
        .find(|d| hs.iter().all(|h| h.normal.dot(*d) <= 1e-12))
}
