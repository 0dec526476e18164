use serde::{Deserialize, Serialize};

use super::Pose;
use crate::model::geom::{bearing_deg, wrap_deg};
use crate::model::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CameraMode {
    #[default]
    Tracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraPolicy {
    pub mode: CameraMode,
    pub offset: Vec3,
    /// Fraction of the remaining distance to the target covered each frame.
    pub smoothing: f64,
    pub fov_deg: f64,
    pub max_range_m: f64,
}

impl Default for CameraPolicy {
    fn default() -> Self {
        Self { mode: CameraMode::Tracking, offset: Vec3::new(0.0, -6.0, 3.0), smoothing: 0.1, fov_deg: 90.0, max_range_m: 50.0 }
    }
}

/// Index of the region holding the most active actors; ties go to the lower index.
pub fn focus_region(active_regions: &[usize]) -> Option<usize> {
    let max = active_regions.iter().copied().max()?;
    let mut counts = vec![0usize; max + 1];
    for &r in active_regions {
        counts[r] += 1;
    }
    let best = counts.iter().copied().max()?;
    counts.iter().position(|&c| c == best)
}

/// One tracking step: move the camera a `smoothing` fraction toward the
/// centroid of the focus actors plus the offset, then face the centroid.
/// Without focus actors the camera holds its pose.
pub fn update_camera(previous: Pose, focus_actors: &[Vec3], policy: &CameraPolicy) -> Pose {
    let Some(centroid) = Vec3::centroid(focus_actors.iter().copied()) else {
        return previous;
    };
    let target = centroid + policy.offset;
    let position = previous.position + (target - previous.position) * policy.smoothing;
    let to = centroid - position;
    let yaw_deg = if to.horizontal_norm() > 1e-12 { bearing_deg(to.x, to.y) } else { previous.yaw_deg };
    Pose { position, yaw_deg }
}

/// Horizontal frustum membership: inside the range and within half the field
/// of view of the camera heading. Occlusion is not modelled.
pub fn visible(camera: Pose, target: Vec3, policy: &CameraPolicy) -> bool {
    let d = target - camera.position;
    let dist = d.horizontal_norm();
    if dist < 1e-9 || dist > policy.max_range_m {
        return false;
    }
    let offset = wrap_deg(bearing_deg(d.x, d.y) - camera.yaw_deg);
    offset.abs() <= policy.fov_deg / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_static_actor() {
        let policy = CameraPolicy::default();
        let actor = Vec3::new(3.0, 4.0, 0.0);
        let target = actor + policy.offset;
        let mut pose = Pose { position: Vec3::new(20.0, -10.0, 5.0), yaw_deg: 0.0 };
        let d0 = pose.position.distance(target);
        for k in 1..=100 {
            pose = update_camera(pose, &[actor], &policy);
            // Distance shrinks geometrically by (1 - smoothing) each frame.
            let bound = d0 * (1.0 - policy.smoothing).powi(k) + 1e-9;
            assert!(pose.position.distance(target) <= bound);
        }
        assert!(pose.position.distance(target) < 0.01 || d0 * 0.9f64.powi(100) >= 0.01);
    }

    #[test]
    fn symmetric_actors_center_target() {
        let policy = CameraPolicy::default();
        let actors = [Vec3::new(-2.0, 1.0, 0.0), Vec3::new(2.0, -1.0, 0.0)];
        let start = Pose { position: policy.offset, yaw_deg: 0.0 };
        let pose = update_camera(start, &actors, &policy);
        assert_eq!(pose.position.x, policy.offset.x);
    }

    #[test]
    fn focus_prefers_lower_index_on_tie() {
        assert_eq!(focus_region(&[1, 0, 1, 0]), Some(0));
        assert_eq!(focus_region(&[2, 1, 1]), Some(1));
        assert_eq!(focus_region(&[]), None);
    }

    #[test]
    fn frustum() {
        let policy = CameraPolicy::default();
        let cam = Pose { position: Vec3::ZERO, yaw_deg: 0.0 };
        assert!(visible(cam, Vec3::new(0.0, 10.0, 0.0), &policy));
        assert!(visible(cam, Vec3::new(10.0, 10.0, 0.0), &policy));
        assert!(!visible(cam, Vec3::new(10.0, 9.0, 0.0), &policy));
        assert!(!visible(cam, Vec3::new(0.0, -10.0, 0.0), &policy));
        assert!(!visible(cam, Vec3::new(0.0, 60.0, 0.0), &policy));
    }
}
