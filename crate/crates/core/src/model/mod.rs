//! Shared domain types: story graphs, the capability registry and geometry.

pub mod geom;
pub mod graph;
pub mod io;
pub mod registry;

pub use geom::{Aabb, Vec3};
pub use graph::{
    Actor, EntityId, EntityKind, Event, EventKind, Gender, GestGraph, ObjectEntity, TemporalRelation, GRAPH_FORMAT_VERSION,
};
pub use io::{
    default_registry, default_registry_bytes, parse_graph, parse_registry, serialize_graph, serialize_registry,
    ModelError,
};
pub use registry::{ActionCategory, ActionSpec, CapabilityRegistry, EpisodeSpec, PoiSpec, RegionSpec, Transfer};
