use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::geom::{Aabb, Vec3};
use super::graph::EventKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    Social,
    Manipulation,
    Locomotion,
    Exercise,
}

/// Direction of an object hand-over for exchange actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    Give,
    Receive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    #[serde(skip)]
    pub key: String,
    pub category: ActionCategory,
    pub duration_range_s: [f64; 2],
    pub requires_object: bool,
    pub is_movement_only: bool,
    /// Third-person verb phrase. `{object}` and `{partner}` are substituted.
    pub verb: String,
    #[serde(default = "default_event_kind")]
    pub event_kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<Transfer>,
}

fn default_event_kind() -> EventKind {
    EventKind::Action
}

impl ActionSpec {
    /// Actions a single actor may chain on their own at a POI.
    pub fn is_solo(&self) -> bool {
        self.event_kind == EventKind::Action && !self.is_movement_only
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiSpec {
    pub key: String,
    pub position: Vec3,
    /// Facing of an actor performing a stationary action here, degrees clockwise from North.
    #[serde(default)]
    pub heading_deg: f64,
    pub valid_actions: Vec<String>,
    #[serde(default)]
    pub transitions: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub object_slots: Vec<String>,
}

impl PoiSpec {
    pub fn allows(&self, action: &str) -> bool {
        self.valid_actions.iter().any(|a| a == action)
    }

    pub fn next_actions(&self, action: &str) -> &[String] {
        self.transitions.get(action).map(Vec::as_slice).unwrap_or(&[])
    }

    /// World position of object slot `index`. Slots sit on a widening ring
    /// around the POI, so a lower index is always nearer.
    pub fn slot_position(&self, index: usize) -> Vec3 {
        let n = self.object_slots.len().max(1) as f64;
        let angle = std::f64::consts::TAU * index as f64 / n;
        let radius = 0.6 + 0.2 * index as f64;
        self.position + Vec3::new(radius * angle.sin(), radius * angle.cos(), 0.8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub key: String,
    pub name: String,
    pub bounds: Aabb,
    pub pois: Vec<PoiSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub key: String,
    pub category: String,
    pub regions: Vec<RegionSpec>,
}

impl EpisodeSpec {
    pub fn region(&self, key: &str) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.key == key)
    }

    pub fn region_index(&self, key: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.key == key)
    }

    pub fn poi(&self, key: &str) -> Option<&PoiSpec> {
        self.regions.iter().flat_map(|r| r.pois.iter()).find(|p| p.key == key)
    }

    pub fn region_of_poi(&self, key: &str) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.pois.iter().any(|p| p.key == key))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityRegistry {
    pub format_version: u32,
    pub episodes: Vec<EpisodeSpec>,
    pub actor_models: Vec<String>,
    pub object_types: Vec<String>,
    pub actions: BTreeMap<String, ActionSpec>,
}

impl CapabilityRegistry {
    pub fn action(&self, key: &str) -> Option<&ActionSpec> {
        self.actions.get(key)
    }

    pub fn episode(&self, key: &str) -> Option<&EpisodeSpec> {
        self.episodes.iter().find(|e| e.key == key)
    }

    /// Categories in first-appearance order with their episodes.
    pub fn categories(&self) -> Vec<(&str, Vec<&EpisodeSpec>)> {
        let mut out: Vec<(&str, Vec<&EpisodeSpec>)> = Vec::new();
        for ep in &self.episodes {
            match out.iter_mut().find(|(c, _)| *c == ep.category) {
                Some((_, eps)) => eps.push(ep),
                None => out.push((ep.category.as_str(), vec![ep])),
            }
        }
        out
    }

    /// The locomotion action used for inserted walks.
    pub fn movement_action(&self) -> Option<&ActionSpec> {
        self.actions.values().find(|a| a.is_movement_only)
    }

    pub fn object_type_name(key: &str) -> String {
        key.replace('_', " ")
    }
}
