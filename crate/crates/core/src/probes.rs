//! Probe clips, their geometric labels, story splits and the event-aware
//! frame sampler.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collectors::Compass;
use crate::model::geom::{bearing_deg, wrap_deg};
use crate::model::{CapabilityRegistry, EntityId, EntityKind, EventKind, GestGraph, Vec3};
use crate::sim::{visible, CameraPolicy, FrameLog, Pose};
use crate::temporal::EventTimeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub motion_threshold_m: f64,
    pub clip_fps: u32,
    pub clip_frames: usize,
    pub min_event_s: f64,
    pub camera_dist_bounds_m: [f64; 2],
    pub pair_dist_bounds_m: [f64; 2],
    pub ambiguity_eps_m: f64,
    pub ambiguity_eps_deg: f64,
    pub split_fracs: [f64; 3],
    /// Share of clip frames an actor must be visible in to be counted.
    pub visible_fraction: f64,
    pub camera: CameraPolicy,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            motion_threshold_m: 0.2,
            clip_fps: 4,
            clip_frames: 16,
            min_event_s: 4.0,
            camera_dist_bounds_m: [3.0, 8.0],
            pair_dist_bounds_m: [2.0, 6.0],
            ambiguity_eps_m: 0.1,
            ambiguity_eps_deg: 2.0,
            split_fracs: [0.70, 0.15, 0.15],
            visible_fraction: 0.5,
            camera: CameraPolicy::default(),
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), String> {
        let ordered = |b: [f64; 2]| b[0] >= 0.0 && b[0] < b[1];
        if !ordered(self.camera_dist_bounds_m) || !ordered(self.pair_dist_bounds_m) {
            return Err("distance bounds must be ascending".into());
        }
        if (self.split_fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.split_fracs.iter().any(|f| *f < 0.0) {
            return Err("split fractions must be non-negative and sum to 1".into());
        }
        if self.clip_fps == 0 || self.clip_frames == 0 {
            return Err("clip_fps and clip_frames must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub clip_id: String,
    pub story_id: String,
    pub event_id: u32,
    pub frame_indices: Vec<u32>,
    pub split: Split,
}

/// One clip per event that is long enough and not plain locomotion.
pub fn extract_clips(
    story_id: &str,
    graph: &GestGraph,
    timeline: &EventTimeline,
    registry: &CapabilityRegistry,
    split: Split,
    cfg: &ProbeConfig,
) -> Vec<ClipSpec> {
    let fps = timeline.fps as f64;
    let mut out = Vec::new();
    for ev in &graph.events {
        let movement_only = registry.action(&ev.action).is_some_and(|a| a.is_movement_only);
        if ev.kind == EventKind::Movement || movement_only {
            continue;
        }
        let Some(span) = timeline.get(ev.event_id) else { continue };
        if (span.len() as f64) / fps < cfg.min_event_s {
            continue;
        }
        let start_s = span.start as f64 / fps;
        let frame_indices = (0..cfg.clip_frames)
            .map(|k| ((start_s + k as f64 / cfg.clip_fps as f64) * fps).round() as u32)
            .collect();
        out.push(ClipSpec {
            clip_id: format!("{story_id}-e{:04}", ev.event_id),
            story_id: story_id.to_string(),
            event_id: ev.event_id,
            frame_indices,
            split,
        });
    }
    out
}

/// Assigns stories to splits, stratified by category. Each stratum is
/// shuffled and cut by largest-remainder apportionment; corpora with fewer
/// than three stories go entirely to training.
pub fn split_stories(stories: &[(String, String)], cfg: &ProbeConfig, seed: u64) -> BTreeMap<String, Split> {
    let mut out = BTreeMap::new();
    if stories.len() < 3 {
        for (id, _) in stories {
            out.insert(id.clone(), Split::Train);
        }
        return out;
    }
    let mut strata: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, cat) in stories {
        strata.entry(cat.as_str()).or_default().push(id.as_str());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in strata.values_mut() {
        members.sort_unstable();
        members.shuffle(&mut rng);
        let counts = apportion(members.len(), &cfg.split_fracs);
        let mut it = members.iter();
        for (split, n) in Split::ALL.into_iter().zip(counts) {
            for id in it.by_ref().take(n) {
                out.insert(id.to_string(), split);
            }
        }
    }
    out
}

/// Largest-remainder apportionment of `n` items; ties favour earlier shares.
pub fn apportion(n: usize, fracs: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let left = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceClass {
    Near,
    Medium,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairDistanceClass {
    Close,
    Medium,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleChange {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproachRecede {
    Approach,
    Recede,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelativeMotion {
    Converging,
    Diverging,
}

/// Index of the half-open class `[low, high)` holding `v`.
fn class_index(v: f64, bounds: [f64; 2]) -> usize {
    if v < bounds[0] {
        0
    } else if v < bounds[1] {
        1
    } else {
        2
    }
}

pub fn camera_distance_class(d: f64, bounds: [f64; 2]) -> DistanceClass {
    [DistanceClass::Near, DistanceClass::Medium, DistanceClass::Far][class_index(d, bounds)]
}

pub fn pair_distance_class(d: f64, bounds: [f64; 2]) -> PairDistanceClass {
    [PairDistanceClass::Close, PairDistanceClass::Medium, PairDistanceClass::Far][class_index(d, bounds)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneLabels {
    /// 1 to 5, where 5 means five or more; absent when no actor is visible.
    pub actor_count: Option<u8>,
    pub event_boundary: bool,
    pub motion_presence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLabels {
    pub entity: EntityId,
    pub entity_presence: bool,
    pub camera_distance: DistanceClass,
    pub angle_change: Option<AngleChange>,
    pub approach_recede: Option<ApproachRecede>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabels {
    pub a: EntityId,
    pub b: EntityId,
    pub depth_order: bool,
    pub pair_direction: Compass,
    pub pair_distance: PairDistanceClass,
    pub relative_motion: Option<RelativeMotion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipLabels {
    pub clip_id: String,
    pub scene: SceneLabels,
    pub entities: Vec<EntityLabels>,
    pub pairs: Vec<PairLabels>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("entity {0} is not in the frame log")]
    EntityUnknown(EntityId),
    #[error("clip frame {0} is outside the frame log")]
    FrameOutOfRange(u32),
}

fn clip_poses(clip: &ClipSpec, log: &FrameLog, k: usize) -> Result<Vec<Pose>, ProbeError> {
    clip.frame_indices
        .iter()
        .map(|&f| {
            if (f as usize) < log.frame_count() {
                Ok(log.frame(f as usize)[k])
            } else {
                Err(ProbeError::FrameOutOfRange(f))
            }
        })
        .collect()
}

fn camera_index(log: &FrameLog) -> usize {
    log.entity_index(EntityId::CAMERA).expect("frame log has a camera")
}

pub fn label_scene(clip: &ClipSpec, log: &FrameLog, timeline: &EventTimeline, cfg: &ProbeConfig) -> Result<SceneLabels, ProbeError> {
    let cams = clip_poses(clip, log, camera_index(log))?;
    let mut visible_actors = 0u32;
    let mut moved = false;
    for (k, info) in log.entities.iter().enumerate() {
        if info.kind != EntityKind::Actor {
            continue;
        }
        let poses = clip_poses(clip, log, k)?;
        let seen = poses.iter().zip(&cams).filter(|(p, c)| visible(**c, p.position, &cfg.camera)).count();
        if seen as f64 >= cfg.visible_fraction * poses.len() as f64 {
            visible_actors += 1;
        }
        let (first, last) = (poses[0].position, poses[poses.len() - 1].position);
        moved |= first.distance(last) > cfg.motion_threshold_m;
    }
    let (lo, hi) = (*clip.frame_indices.first().unwrap_or(&0) as i64, *clip.frame_indices.last().unwrap_or(&0) as i64);
    let inside = |f: i64| lo < f && f < hi;
    let event_boundary = timeline
        .intervals
        .iter()
        .filter(|(id, _)| **id != clip.event_id)
        .any(|(_, s)| inside(s.start) || inside(s.end));
    Ok(SceneLabels {
        actor_count: (visible_actors > 0).then(|| visible_actors.min(5) as u8),
        event_boundary,
        motion_presence: moved,
    })
}

/// Azimuth of `target` from the camera, positive to the camera's left.
fn camera_azimuth(cam: Pose, target: Vec3) -> f64 {
    let d = target - cam.position;
    wrap_deg(cam.yaw_deg - bearing_deg(d.x, d.y))
}

/// Horizontal vector in camera coordinates: x to the right, y forward.
fn to_camera_frame(cam: Pose, v: Vec3) -> (f64, f64) {
    let (s, c) = cam.yaw_deg.to_radians().sin_cos();
    (v.x * c - v.y * s, v.x * s + v.y * c)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn label_entity(clip: &ClipSpec, entity: EntityId, log: &FrameLog, cfg: &ProbeConfig) -> Result<EntityLabels, ProbeError> {
    let k = log.entity_index(entity).ok_or(ProbeError::EntityUnknown(entity))?;
    let cams = clip_poses(clip, log, camera_index(log))?;
    let poses = clip_poses(clip, log, k)?;
    let n = poses.len() - 1;
    let dists: Vec<f64> = poses.iter().zip(&cams).map(|(p, c)| c.position.distance(p.position)).collect();
    let d_angle = wrap_deg(camera_azimuth(cams[n], poses[n].position) - camera_azimuth(cams[0], poses[0].position));
    let d_dist = dists[n] - dists[0];
    Ok(EntityLabels {
        entity,
        entity_presence: poses.iter().zip(&cams).any(|(p, c)| visible(*c, p.position, &cfg.camera)),
        camera_distance: camera_distance_class(mean(dists.iter().copied()), cfg.camera_dist_bounds_m),
        angle_change: if d_angle.abs() < cfg.ambiguity_eps_deg {
            None
        } else if d_angle > 0.0 {
            Some(AngleChange::Left)
        } else {
            Some(AngleChange::Right)
        },
        approach_recede: if d_dist.abs() < cfg.ambiguity_eps_m {
            None
        } else if d_dist < 0.0 {
            Some(ApproachRecede::Approach)
        } else {
            Some(ApproachRecede::Recede)
        },
    })
}

pub fn label_pair(clip: &ClipSpec, a: EntityId, b: EntityId, log: &FrameLog, cfg: &ProbeConfig) -> Result<PairLabels, ProbeError> {
    let ka = log.entity_index(a).ok_or(ProbeError::EntityUnknown(a))?;
    let kb = log.entity_index(b).ok_or(ProbeError::EntityUnknown(b))?;
    let cams = clip_poses(clip, log, camera_index(log))?;
    let pa = clip_poses(clip, log, ka)?;
    let pb = clip_poses(clip, log, kb)?;
    let n = cams.len();
    let cam_a = mean((0..n).map(|i| cams[i].position.distance(pa[i].position)));
    let cam_b = mean((0..n).map(|i| cams[i].position.distance(pb[i].position)));
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in 0..n {
        let (x, y) = to_camera_frame(cams[i], pb[i].position - pa[i].position);
        sx += x;
        sy += y;
    }
    let gap: Vec<f64> = (0..n).map(|i| pa[i].position.distance(pb[i].position)).collect();
    let change = gap[n - 1] - gap[0];
    Ok(PairLabels {
        a,
        b,
        depth_order: cam_a < cam_b,
        pair_direction: Compass::from_bearing(bearing_deg(sx / n as f64, sy / n as f64)),
        pair_distance: pair_distance_class(mean(gap.iter().copied()), cfg.pair_dist_bounds_m),
        relative_motion: if change < -cfg.ambiguity_eps_m {
            Some(RelativeMotion::Converging)
        } else if change > cfg.ambiguity_eps_m {
            Some(RelativeMotion::Diverging)
        } else {
            None
        },
    })
}

/// All labels of a clip: the scene, every actor and object, and every
/// unordered pair of them.
pub fn label_clip(clip: &ClipSpec, log: &FrameLog, timeline: &EventTimeline, cfg: &ProbeConfig) -> Result<ClipLabels, ProbeError> {
    let ids: Vec<EntityId> =
        log.entities.iter().filter(|e| matches!(e.kind, EntityKind::Actor | EntityKind::Object)).map(|e| e.id).collect();
    let entities = ids.iter().map(|&e| label_entity(clip, e, log, cfg)).collect::<Result<_, _>>()?;
    let mut pairs = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1) / 2);
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            pairs.push(label_pair(clip, a, b, log, cfg)?);
        }
    }
    Ok(ClipLabels { clip_id: clip.clip_id.clone(), scene: label_scene(clip, log, timeline, cfg)?, entities, pairs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridSampleConfig {
    pub max_frames: usize,
    pub fill_fps: u32,
}

impl Default for HybridSampleConfig {
    fn default() -> Self {
        Self { max_frames: 64, fill_fps: 1 }
    }
}

/// Evenly spread picks of `k` items out of `items`.
fn spread<T: Copy>(items: &[T], k: usize) -> Vec<T> {
    if k >= items.len() {
        return items.to_vec();
    }
    (0..k).map(|i| items[i * items.len() / k]).collect()
}

/// Mid frames of every story event, topped up with evenly spread frames of
/// a `fill_fps` grid, or evenly thinned when there are too many events.
pub fn hybrid_sample(graph: &GestGraph, timeline: &EventTimeline, frame_count: usize, cfg: &HybridSampleConfig) -> Vec<u32> {
    let mids: BTreeSet<u32> =
        graph.story_events().filter_map(|e| timeline.get(e.event_id)).map(|s| s.mid().max(0) as u32).collect();
    let mids: Vec<u32> = mids.into_iter().collect();
    if mids.len() >= cfg.max_frames {
        return spread(&mids, cfg.max_frames);
    }
    let step = (timeline.fps / cfg.fill_fps.max(1)).max(1) as usize;
    let candidates: Vec<u32> =
        (0..frame_count).step_by(step).map(|f| f as u32).filter(|f| mids.binary_search(f).is_err()).collect();
    let mut out = mids.clone();
    out.extend(spread(&candidates, cfg.max_frames - mids.len()));
    out.sort_unstable();
    out
}
