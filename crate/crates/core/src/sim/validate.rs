use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{CapabilityRegistry, EntityId, EventKind, GestGraph, Transfer};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("event {event_id}: unknown action `{action}`")]
    UnknownAction { event_id: u32, action: String },
    #[error("event {event_id}: action `{action}` is not available at POI `{poi}`")]
    ActionNotAllowed { event_id: u32, action: String, poi: String },
    #[error("event {event_id}: `{from}` cannot be followed by `{to}` at POI `{poi}`")]
    InvalidChainTransition { event_id: u32, from: String, to: String, poi: String },
    #[error("event {event_id}: missing or unusable object {object:?}")]
    MissingObject { event_id: u32, object: Option<EntityId> },
    #[error("{}unknown region or POI `{key}`", event_id.map(|e| format!("event {e}: ")).unwrap_or_default())]
    UnknownRegion { event_id: Option<u32>, key: String },
    #[error("event {event_id}: partner event is missing or not at the same POI")]
    NotCoLocated { event_id: u32 },
    #[error("actor {actor}: unknown model `{model}`")]
    UnknownActorModel { actor: EntityId, model: String },
}

/// Checks that a story can be executed in the registry's world. All problems
/// are reported, in event order.
pub fn validate(graph: &GestGraph, registry: &CapabilityRegistry) -> Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    let Some(episode) = registry.episode(&graph.episode) else {
        return Err(vec![ValidationError::UnknownRegion { event_id: None, key: graph.episode.clone() }]);
    };
    for r in &graph.region_plan {
        if episode.region(r).is_none() {
            errors.push(ValidationError::UnknownRegion { event_id: None, key: r.clone() });
        }
    }
    for a in &graph.actors {
        if !registry.actor_models.contains(&a.model) {
            errors.push(ValidationError::UnknownActorModel { actor: a.id, model: a.model.clone() });
        }
    }

    let mut previous: BTreeMap<EntityId, usize> = BTreeMap::new();
    // Whether each actor holds each item, following that actor's own chain:
    // an initial owner holds it until giving it away, a receiver from the
    // moment of receipt.
    let mut holds: BTreeMap<(EntityId, EntityId), bool> =
        graph.objects.iter().filter_map(|o| o.owner.map(|owner| ((owner, o.id), true))).collect();

    for (idx, ev) in graph.events.iter().enumerate() {
        let id = ev.event_id;
        let prev = previous.insert(ev.actor, idx).map(|i| &graph.events[i]);
        let Some(spec) = registry.action(&ev.action) else {
            errors.push(ValidationError::UnknownAction { event_id: id, action: ev.action.clone() });
            continue;
        };
        let Some(poi) = episode.poi(&ev.poi) else {
            errors.push(ValidationError::UnknownRegion { event_id: Some(id), key: ev.poi.clone() });
            continue;
        };
        let region = episode.region_of_poi(&ev.poi).map(|r| r.key.as_str()).unwrap_or_default();
        if !graph.region_plan.iter().any(|r| r == region) {
            errors.push(ValidationError::UnknownRegion { event_id: Some(id), key: region.to_string() });
        }
        if !spec.is_movement_only && !poi.allows(&ev.action) {
            errors.push(ValidationError::ActionNotAllowed { event_id: id, action: ev.action.clone(), poi: ev.poi.clone() });
        }

        if let Some(p) = prev {
            let chained = p.kind == EventKind::Action && ev.kind == EventKind::Action && p.poi == ev.poi;
            let movement = |a: &str| registry.action(a).is_some_and(|s| s.is_movement_only);
            if chained && !movement(&p.action) && !movement(&ev.action) && !poi.next_actions(&p.action).contains(&ev.action) {
                errors.push(ValidationError::InvalidChainTransition {
                    event_id: id,
                    from: p.action.clone(),
                    to: ev.action.clone(),
                    poi: ev.poi.clone(),
                });
            }
        }

        if let Some(t) = &spec.object_type {
            let ok = ev.patient.and_then(|o| graph.object(o)).is_some_and(|o| {
                &o.type_key == t && episode.poi(&o.home_poi).is_some_and(|h| h.object_slots.contains(t))
            });
            if !ok {
                errors.push(ValidationError::MissingObject { event_id: id, object: ev.patient });
            }
        }

        if ev.kind.is_paired() {
            match graph.partner_event(id) {
                Some(other) if other.poi == ev.poi => {}
                _ => errors.push(ValidationError::NotCoLocated { event_id: id }),
            }
        }
        if ev.kind == EventKind::Exchange {
            let item = ev.item.filter(|i| graph.object(*i).is_some());
            match (item, spec.transfer) {
                (None, _) => errors.push(ValidationError::MissingObject { event_id: id, object: ev.item }),
                (Some(i), Some(Transfer::Give)) => {
                    if holds.insert((ev.actor, i), false) != Some(true) {
                        errors.push(ValidationError::MissingObject { event_id: id, object: Some(i) });
                    }
                }
                (Some(i), _) => {
                    holds.insert((ev.actor, i), true);
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
