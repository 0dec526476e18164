//! Grounding and kinematic execution of scheduled stories.

pub mod camera;
mod execute;
mod ground;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CapabilityRegistry, EntityId, EntityKind, GestGraph, Vec3};
use crate::temporal::{schedule, EventTimeline, SchedulePolicy, TemporalError};

pub use camera::{focus_region, update_camera, visible, CameraMode, CameraPolicy};
pub use execute::simulate;
pub use ground::{ground, insert_movements, movement_frames};
pub use validate::{validate, ValidationError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub fps: u32,
    pub walk_speed: f64,
    /// Radius of the per-actor standing offset around each POI.
    pub actor_jitter_m: f64,
    /// Extra frames simulated after the last event so the camera can settle.
    pub settle_frames: u32,
    pub camera: CameraPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { fps: 25, walk_speed: 1.4, actor_jitter_m: 0.5, settle_frames: 25, camera: CameraPolicy::default() }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("no free `{type_key}` slot at POI `{poi}` for object {object}")]
    NoFreeSlot { object: EntityId, type_key: String, poi: String },
    #[error("story references unknown episode or POI `{0}`")]
    UnknownLocation(String),
    #[error("story failed validation: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("scheduling failed: {0}")]
    Schedule(#[from] TemporalError),
}

/// Everything produced by executing one story.
#[derive(Debug, Clone)]
pub struct Execution {
    /// The story with movement events inserted.
    pub graph: GestGraph,
    pub timeline: EventTimeline,
    pub world: World,
    pub log: FrameLog,
}

/// Grounding randomness for a story, independent of the stream that generated it.
pub fn ground_rng(graph: &GestGraph) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(graph.seed);
    rng.set_stream(1);
    rng
}

/// Validate, ground, insert movements, schedule and simulate.
pub fn execute_story(
    graph: &GestGraph,
    registry: &CapabilityRegistry,
    cfg: &SimConfig,
    policy: &SchedulePolicy,
) -> Result<Execution, SimError> {
    validate(graph, registry).map_err(SimError::Invalid)?;
    let world = ground(graph, registry, cfg, &mut ground_rng(graph))?;
    let graph = insert_movements(graph, &world, registry);
    let timeline = schedule(&graph, registry, policy, cfg.fps)?;
    let log = simulate(&world, &graph, &timeline);
    Ok(Execution { graph, timeline, world, log })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityState {
    pub info: EntityInfo,
    pub pose: Pose,
    pub region: String,
}

/// A grounded story: every abstract entity bound to a concrete place.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub episode: String,
    pub fps: u32,
    pub walk_speed: f64,
    pub camera_policy: CameraPolicy,
    pub settle_frames: u32,
    pub entities: BTreeMap<EntityId, EntityState>,
    /// Standing offset of each actor relative to any POI position.
    pub actor_offsets: BTreeMap<EntityId, Vec3>,
    /// Slot assignment and position of each object.
    pub object_slots: BTreeMap<EntityId, (String, usize, Vec3)>,
    pub pois: BTreeMap<String, PoiPlace>,
    /// Actions that hand an item to the partner.
    pub give_actions: BTreeSet<String>,
}

/// Placement of a POI within the grounded episode.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiPlace {
    pub position: Vec3,
    pub heading_deg: f64,
    /// Index of the POI's region in the episode.
    pub region_index: usize,
}

/// Per-frame poses of every entity, camera included.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLog {
    pub fps: u32,
    /// Sorted by id; the camera comes first.
    pub entities: Vec<EntityInfo>,
    poses: Vec<Pose>,
}

impl FrameLog {
    pub fn new(fps: u32, entities: Vec<EntityInfo>) -> Self {
        Self { fps, entities, poses: Vec::new() }
    }

    pub fn from_poses(fps: u32, entities: Vec<EntityInfo>, poses: Vec<Pose>) -> Self {
        assert!(entities.is_empty() || poses.len() % entities.len() == 0, "pose count not a multiple of entity count");
        Self { fps, entities, poses }
    }

    pub fn push_frame(&mut self, frame: &[Pose]) {
        assert_eq!(frame.len(), self.entities.len());
        self.poses.extend_from_slice(frame);
    }

    pub fn frame_count(&self) -> usize {
        if self.entities.is_empty() {
            0
        } else {
            self.poses.len() / self.entities.len()
        }
    }

    pub fn frame(&self, f: usize) -> &[Pose] {
        let n = self.entities.len();
        &self.poses[f * n..(f + 1) * n]
    }

    pub fn entity_index(&self, id: EntityId) -> Option<usize> {
        self.entities.iter().position(|e| e.id == id)
    }

    pub fn pose(&self, f: usize, id: EntityId) -> Option<Pose> {
        self.entity_index(id).map(|i| self.frame(f)[i])
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }
}
