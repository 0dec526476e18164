//! Reading and writing graph and registry documents.

use std::collections::HashSet;

use thiserror::Error;

use super::graph::{EntityId, EventKind, GestGraph, GRAPH_FORMAT_VERSION};
use super::registry::CapabilityRegistry;

pub const REGISTRY_FORMAT_VERSION: u32 = 1;

static DEFAULT_REGISTRY: &str = include_str!("../../data/default_registry.json");

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("dangling reference at {location}: {message}")]
    Reference { location: String, message: String },
    #[error("invariant violated at {location}: {message}")]
    Invariant { location: String, message: String },
    #[error("POI `{poi}` has a transition involving undeclared action `{action}`")]
    UnknownActionInTransition { poi: String, action: String },
}

fn syntax(e: serde_json::Error) -> ModelError {
    ModelError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
}

fn reference(location: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Reference { location: location.into(), message: message.into() }
}

fn invariant(location: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Invariant { location: location.into(), message: message.into() }
}

pub fn parse_graph(bytes: &[u8]) -> Result<GestGraph, ModelError> {
    let graph: GestGraph = serde_json::from_slice(bytes).map_err(syntax)?;
    check_graph(&graph)?;
    Ok(graph)
}

pub fn serialize_graph(graph: &GestGraph) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(graph).expect("graph serializes");
    out.push(b'\n');
    out
}

/// Registry-independent structural checks on a graph.
pub fn check_graph(g: &GestGraph) -> Result<(), ModelError> {
    if g.format_version != GRAPH_FORMAT_VERSION {
        return Err(invariant(
            "format_version",
            format!("unsupported version {}", g.format_version),
        ));
    }

    let mut ids = HashSet::new();
    for (i, a) in g.actors.iter().enumerate() {
        if a.id == EntityId::CAMERA {
            return Err(invariant(format!("actors[{i}].id"), "id 0 is reserved for the camera"));
        }
        if !ids.insert(a.id) {
            return Err(invariant(format!("actors[{i}].id"), format!("duplicate entity id {}", a.id.0)));
        }
    }
    for (i, o) in g.objects.iter().enumerate() {
        if o.id == EntityId::CAMERA {
            return Err(invariant(format!("objects[{i}].id"), "id 0 is reserved for the camera"));
        }
        if !ids.insert(o.id) {
            return Err(invariant(format!("objects[{i}].id"), format!("duplicate entity id {}", o.id.0)));
        }
    }
    for (i, o) in g.objects.iter().enumerate() {
        if let Some(owner) = o.owner {
            if g.actor(owner).is_none() {
                return Err(reference(format!("objects[{i}].owner"), format!("no actor with id {}", owner.0)));
            }
        }
    }

    let mut event_ids = HashSet::new();
    for (i, e) in g.events.iter().enumerate() {
        let loc = |field: &str| format!("events[{i}].{field}");
        if !event_ids.insert(e.event_id) {
            return Err(invariant(loc("id"), format!("duplicate event id {}", e.event_id)));
        }
        if g.actor(e.actor).is_none() {
            return Err(reference(loc("actor"), format!("no actor with id {}", e.actor.0)));
        }
        if let Some(p) = e.patient {
            if g.entity_kind(p).is_none() || p == EntityId::CAMERA {
                return Err(reference(loc("patient"), format!("no actor or object with id {}", p.0)));
            }
        }
        if let Some(item) = e.item {
            if g.object(item).is_none() {
                return Err(reference(loc("item"), format!("no object with id {}", item.0)));
            }
        }
        if !(e.duration_s.is_finite() && e.duration_s > 0.0) {
            return Err(invariant(loc("duration_s"), "duration must be positive"));
        }
        if e.kind.is_paired() {
            match e.patient {
                Some(p) if g.actor(p).is_some() && p != e.actor => {}
                _ => {
                    return Err(invariant(
                        loc("patient"),
                        "interactions and exchanges need a second actor as patient",
                    ))
                }
            }
        }
        if e.kind == EventKind::Exchange && e.item.is_none() {
            return Err(invariant(loc("item"), "exchange without an item"));
        }
    }

    for (i, r) in g.relations.iter().enumerate() {
        let loc = |field: &str| format!("relations[{i}].{field}");
        if !event_ids.contains(&r.source) {
            return Err(reference(loc("source"), format!("no event with id {}", r.source)));
        }
        if !event_ids.contains(&r.target) {
            return Err(reference(loc("target"), format!("no event with id {}", r.target)));
        }
        if r.source == r.target {
            return Err(invariant(loc("target"), "relation from an event to itself"));
        }
        if r.allen_set.is_empty() {
            return Err(invariant(loc("allen"), "empty relation set"));
        }
    }
    Ok(())
}

pub fn parse_registry(bytes: &[u8]) -> Result<CapabilityRegistry, ModelError> {
    let mut reg: CapabilityRegistry = serde_json::from_slice(bytes).map_err(syntax)?;
    for (key, spec) in reg.actions.iter_mut() {
        spec.key = key.clone();
    }
    check_registry(&reg)?;
    Ok(reg)
}

pub fn serialize_registry(reg: &CapabilityRegistry) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(reg).expect("registry serializes");
    out.push(b'\n');
    out
}

/// The registry bundled with the crate.
pub fn default_registry() -> CapabilityRegistry {
    parse_registry(DEFAULT_REGISTRY.as_bytes()).expect("bundled registry is valid")
}

pub fn default_registry_bytes() -> &'static [u8] {
    DEFAULT_REGISTRY.as_bytes()
}

pub fn check_registry(reg: &CapabilityRegistry) -> Result<(), ModelError> {
    if reg.format_version != REGISTRY_FORMAT_VERSION {
        return Err(invariant("format_version", format!("unsupported version {}", reg.format_version)));
    }
    if reg.episodes.is_empty() {
        return Err(invariant("episodes", "registry declares no episodes"));
    }
    if reg.actor_models.is_empty() {
        return Err(invariant("actor_models", "registry declares no actor models"));
    }
    let object_types: HashSet<&str> = reg.object_types.iter().map(String::as_str).collect();

    for (key, a) in &reg.actions {
        let loc = format!("actions.{key}");
        let [lo, hi] = a.duration_range_s;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(invariant(loc, "duration range must satisfy 0 < min <= max"));
        }
        match (&a.object_type, a.requires_object) {
            (Some(t), true) if object_types.contains(t.as_str()) => {}
            (Some(t), true) => return Err(invariant(loc, format!("undeclared object type `{t}`"))),
            (None, false) => {}
            _ => return Err(invariant(loc, "requires_object disagrees with object_type")),
        }
    }

    let mut episode_keys = HashSet::new();
    for (ei, ep) in reg.episodes.iter().enumerate() {
        let eloc = format!("episodes[{ei}]");
        if !episode_keys.insert(ep.key.as_str()) {
            return Err(invariant(eloc, format!("duplicate episode key `{}`", ep.key)));
        }
        if ep.regions.is_empty() {
            return Err(invariant(eloc, "episode has no regions"));
        }
        let mut poi_keys = HashSet::new();
        for (ri, region) in ep.regions.iter().enumerate() {
            let rloc = format!("{eloc}.regions[{ri}]");
            if region.pois.is_empty() {
                return Err(invariant(rloc, "region has no POIs"));
            }
            if !region.bounds.is_ordered() {
                return Err(invariant(rloc, "region bounds are inverted"));
            }
            for (pi, poi) in region.pois.iter().enumerate() {
                let ploc = format!("{rloc}.pois[{pi}]");
                if !poi_keys.insert(poi.key.as_str()) {
                    return Err(invariant(ploc, format!("duplicate POI key `{}`", poi.key)));
                }
                if !region.bounds.contains(poi.position) {
                    return Err(invariant(ploc, "POI lies outside its region bounds"));
                }
                for act in &poi.valid_actions {
                    if !reg.actions.contains_key(act) {
                        return Err(invariant(ploc.clone(), format!("undeclared action `{act}`")));
                    }
                }
                for (from, nexts) in &poi.transitions {
                    for act in std::iter::once(from).chain(nexts) {
                        if !reg.actions.contains_key(act) {
                            return Err(ModelError::UnknownActionInTransition {
                                poi: poi.key.clone(),
                                action: act.clone(),
                            });
                        }
                    }
                }
                for slot in &poi.object_slots {
                    if !object_types.contains(slot.as_str()) {
                        return Err(invariant(ploc.clone(), format!("undeclared object type `{slot}`")));
                    }
                }
            }
        }
    }
    Ok(())
}
