//! Frame-aligned ground truth: pairwise spatial relations and event frames.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::geom::{bearing_deg, wrap_deg};
use crate::model::{EntityId, EventKind, GestGraph};
use crate::sim::{FrameLog, Pose};
use crate::temporal::EventTimeline;

/// Eight-way world direction. +Y is North; bins run clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Compass {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
}

impl Compass {
    pub const ALL: [Compass; 8] = [Compass::N, Compass::NE, Compass::E, Compass::SE, Compass::S, Compass::SW, Compass::W, Compass::NW];

    /// Bin of a bearing in degrees. Bins are `[center - 22.5, center + 22.5)`.
    pub fn from_bearing(bearing_deg: f64) -> Compass {
        let b = bearing_deg.rem_euclid(360.0);
        let i = ((b + 22.5) / 45.0).floor() as usize % 8;
        Compass::ALL[i]
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Compass> {
        Compass::ALL.get(i as usize).copied()
    }

    pub fn opposite(self) -> Compass {
        Compass::ALL[(self as usize + 4) % 8]
    }
}

impl fmt::Display for Compass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub const COINCIDENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialRelation {
    pub distance_m: f64,
    pub compass: Compass,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub coincident: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialRelationRecord {
    pub frame: u32,
    pub a: EntityId,
    pub b: EntityId,
    pub relation: SpatialRelation,
}

/// Where `b` lies as seen from `a`. Azimuth is measured from `a`'s facing,
/// positive to the left. Coincident positions give a flagged zero record.
pub fn compute_pair_relation(a: Pose, b: Pose) -> SpatialRelation {
    let d = b.position - a.position;
    let distance_m = d.norm();
    if distance_m < COINCIDENT_EPS {
        return SpatialRelation { distance_m: 0.0, compass: Compass::N, azimuth_deg: 0.0, elevation_deg: 0.0, coincident: true };
    }
    let bearing = bearing_deg(d.x, d.y);
    let flat = d.horizontal_norm() < COINCIDENT_EPS;
    SpatialRelation {
        distance_m,
        compass: if flat { Compass::N } else { Compass::from_bearing(bearing) },
        azimuth_deg: if flat { 0.0 } else { wrap_deg(a.yaw_deg - bearing) },
        elevation_deg: (d.z / distance_m).clamp(-1.0, 1.0).asin().to_degrees(),
        coincident: false,
    }
}

/// All ordered pairs of one frame, sorted by `(a, b)`.
pub fn collect_frame(log: &FrameLog, frame: usize) -> Vec<SpatialRelationRecord> {
    let poses = log.frame(frame);
    let n = poses.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(SpatialRelationRecord {
                    frame: frame as u32,
                    a: log.entities[i].id,
                    b: log.entities[j].id,
                    relation: compute_pair_relation(poses[i], poses[j]),
                });
            }
        }
    }
    out
}

/// Every record of a log, ordered by `(frame, a, b)`.
pub fn collect_all(log: &FrameLog) -> impl Iterator<Item = SpatialRelationRecord> + '_ {
    (0..log.frame_count()).flat_map(move |f| collect_frame(log, f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFrameMapping {
    pub event_id: u32,
    pub actor: EntityId,
    pub action: String,
    pub start_frame: i64,
    pub end_frame: i64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub movement: bool,
}

/// One mapping per scheduled event, in event id order.
pub fn collect_event_mappings(timeline: &EventTimeline, graph: &GestGraph) -> Vec<EventFrameMapping> {
    let mut out: Vec<EventFrameMapping> = graph
        .events
        .iter()
        .filter_map(|e| {
            let span = timeline.get(e.event_id)?;
            Some(EventFrameMapping {
                event_id: e.event_id,
                actor: e.actor,
                action: e.action.clone(),
                start_frame: span.start,
                end_frame: span.end,
                movement: e.kind == EventKind::Movement,
            })
        })
        .collect();
    out.sort_by_key(|m| m.event_id);
    out
}
