use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::temporal::allen::{CoarseRelation, RelationSet};

/// Story-level entity identifier. Id 0 is reserved for the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl EntityId {
    pub const CAMERA: EntityId = EntityId(0);
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Camera,
    Actor,
    Object,
    Poi,
}

impl EntityKind {
    pub fn code(self) -> u8 {
        match self {
            EntityKind::Camera => 0,
            EntityKind::Actor => 1,
            EntityKind::Object => 2,
            EntityKind::Poi => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => EntityKind::Camera,
            1 => EntityKind::Actor,
            2 => EntityKind::Object,
            3 => EntityKind::Poi,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub id: EntityId,
    pub name: String,
    pub gender: Gender,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntity {
    pub id: EntityId,
    #[serde(rename = "type")]
    pub type_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<EntityId>,
    pub home_poi: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Action,
    Movement,
    Interaction,
    Exchange,
}

impl EventKind {
    pub fn is_paired(self) -> bool {
        matches!(self, EventKind::Interaction | EventKind::Exchange)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "id")]
    pub event_id: u32,
    pub actor: EntityId,
    pub action: String,
    /// Object acted on, or the partner actor for interactions and exchanges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient: Option<EntityId>,
    /// Object handed over by an exchange.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<EntityId>,
    pub poi: String,
    pub duration_s: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRelation {
    pub source: u32,
    pub target: u32,
    pub coarse: CoarseRelation,
    #[serde(rename = "allen")]
    pub allen_set: RelationSet,
}

/// A story: who is in it, what they do where, and how the events are ordered.
///
/// Each actor's events appear in `events` in chain order; consecutive events
/// of one actor are implicitly related by `{before, meets}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestGraph {
    pub format_version: u32,
    pub seed: u64,
    pub episode: String,
    pub region_plan: Vec<String>,
    pub actors: Vec<Actor>,
    pub objects: Vec<ObjectEntity>,
    pub events: Vec<Event>,
    pub relations: Vec<TemporalRelation>,
}

pub const GRAPH_FORMAT_VERSION: u32 = 1;

impl GestGraph {
    pub fn actor(&self, id: EntityId) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn object(&self, id: EntityId) -> Option<&ObjectEntity> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn event(&self, id: u32) -> Option<&Event> {
        self.events.iter().find(|e| e.event_id == id)
    }

    pub fn entity_kind(&self, id: EntityId) -> Option<EntityKind> {
        if id == EntityId::CAMERA {
            Some(EntityKind::Camera)
        } else if self.actor(id).is_some() {
            Some(EntityKind::Actor)
        } else if self.object(id).is_some() {
            Some(EntityKind::Object)
        } else {
            None
        }
    }

    /// Event ids of each actor in chain order.
    pub fn chains(&self) -> BTreeMap<EntityId, Vec<u32>> {
        let mut out: BTreeMap<EntityId, Vec<u32>> = BTreeMap::new();
        for a in &self.actors {
            out.entry(a.id).or_default();
        }
        for e in &self.events {
            out.entry(e.actor).or_default().push(e.event_id);
        }
        out
    }

    /// Events excluding inserted movements.
    pub fn story_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind != EventKind::Movement)
    }

    pub fn next_event_id(&self) -> u32 {
        self.events.iter().map(|e| e.event_id + 1).max().unwrap_or(0)
    }

    pub fn next_entity_id(&self) -> u32 {
        let a = self.actors.iter().map(|a| a.id.0);
        let o = self.objects.iter().map(|o| o.id.0);
        a.chain(o).max().unwrap_or(0) + 1
    }

    /// The partner event of an interaction or exchange, found through its
    /// `same_time` relation.
    pub fn partner_event(&self, event_id: u32) -> Option<&Event> {
        let e = self.event(event_id)?;
        if !e.kind.is_paired() {
            return None;
        }
        self.relations
            .iter()
            .filter(|r| r.coarse == CoarseRelation::SameTime)
            .filter_map(|r| {
                if r.source == event_id {
                    Some(r.target)
                } else if r.target == event_id {
                    Some(r.source)
                } else {
                    None
                }
            })
            .filter_map(|other| self.event(other))
            .find(|o| o.kind == e.kind && o.actor == e.patient.unwrap_or(EntityId::CAMERA) && o.patient == Some(e.actor))
    }
}
