//! Qualitative temporal reasoning and frame scheduling.

pub mod allen;
pub mod network;
pub mod schedule;

use thiserror::Error;

pub use allen::{coarse_to_allen, compose, converse, AllenRelation, CoarseRelation, RelationSet};
pub use network::TemporalNetwork;
pub use schedule::{
    check_relation, duration_frames, graph_constraints, graph_network, is_convex, schedule, schedule_events,
    EventTimeline, FrameInterval, SchedulePolicy,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TemporalError {
    #[error("inconsistent network: edge ({i}, {j}) emptied via {k}")]
    InconsistentNetwork { i: u32, j: u32, k: u32 },
    #[error("no base-relation assignment is schedulable ({explored} search nodes explored)")]
    UnschedulableDisjunction { explored: usize },
    #[error("constraints are qualitatively consistent but conflict with the fixed durations")]
    DurationConflict,
    #[error("event {0} is not part of the network")]
    UnknownEvent(u32),
}
