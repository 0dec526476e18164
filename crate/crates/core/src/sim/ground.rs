use std::collections::BTreeMap;

use rand::Rng;

use super::{EntityInfo, EntityState, PoiPlace, Pose, SimConfig, SimError, World};
use crate::model::{CapabilityRegistry, Transfer, EntityId, EntityKind, Event, EventKind, GestGraph, Vec3};

/// Binds actors, objects and the camera to concrete positions.
///
/// Each actor draws one standing offset (uniform in a disk of radius
/// `actor_jitter_m`) that it keeps at every POI. Objects take the free slot
/// of their type nearest to their home POI.
pub fn ground<R: Rng>(graph: &GestGraph, registry: &CapabilityRegistry, cfg: &SimConfig, rng: &mut R) -> Result<World, SimError> {
    let episode = registry.episode(&graph.episode).ok_or_else(|| SimError::UnknownLocation(graph.episode.clone()))?;
    let first_poi = |actor: EntityId| -> Result<&crate::model::PoiSpec, SimError> {
        let key = match graph.events.iter().find(|e| e.actor == actor) {
            Some(e) => e.poi.clone(),
            None => {
                let region = graph.region_plan.first().and_then(|r| episode.region(r));
                region.and_then(|r| r.pois.first()).map(|p| p.key.clone()).unwrap_or_default()
            }
        };
        episode.poi(&key).ok_or(SimError::UnknownLocation(key))
    };
    let region_of = |poi: &str| episode.region_of_poi(poi).map(|r| r.key.clone()).unwrap_or_default();

    let mut entities = BTreeMap::new();
    let mut actor_offsets = BTreeMap::new();
    for actor in &graph.actors {
        let poi = first_poi(actor.id)?;
        let r = cfg.actor_jitter_m * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let offset = Vec3::new(r * theta.sin(), r * theta.cos(), 0.0);
        actor_offsets.insert(actor.id, offset);
        entities.insert(
            actor.id,
            EntityState {
                info: EntityInfo { id: actor.id, kind: EntityKind::Actor, name: actor.name.clone() },
                pose: Pose { position: poi.position + offset, yaw_deg: poi.heading_deg },
                region: region_of(&poi.key),
            },
        );
    }

    let mut taken: BTreeMap<(String, usize), EntityId> = BTreeMap::new();
    let mut object_slots = BTreeMap::new();
    for obj in &graph.objects {
        let poi = episode.poi(&obj.home_poi).ok_or_else(|| SimError::UnknownLocation(obj.home_poi.clone()))?;
        let slot = poi
            .object_slots
            .iter()
            .enumerate()
            .filter(|(i, t)| **t == obj.type_key && !taken.contains_key(&(poi.key.clone(), *i)))
            .map(|(i, _)| (i, poi.slot_position(i)))
            .min_by(|a, b| a.1.distance(poi.position).total_cmp(&b.1.distance(poi.position)).then(a.0.cmp(&b.0)));
        let Some((index, position)) = slot else {
            return Err(SimError::NoFreeSlot { object: obj.id, type_key: obj.type_key.clone(), poi: poi.key.clone() });
        };
        taken.insert((poi.key.clone(), index), obj.id);
        object_slots.insert(obj.id, (poi.key.clone(), index, position));
        let position = match obj.owner.and_then(|o| entities.get(&o)) {
            Some(owner) => carried_position(owner.pose),
            None => position,
        };
        entities.insert(
            obj.id,
            EntityState {
                info: EntityInfo { id: obj.id, kind: EntityKind::Object, name: format!("{}_{}", obj.type_key, obj.id.0) },
                pose: Pose { position, yaw_deg: 0.0 },
                region: region_of(&poi.key),
            },
        );
    }

    // The camera starts settled on the frame-0 target: every actor's start spot.
    let centroid = Vec3::centroid(graph.actors.iter().map(|a| entities[&a.id].pose.position)).unwrap_or(Vec3::ZERO);
    let camera_pos = centroid + cfg.camera.offset;
    let to = centroid - camera_pos;
    let yaw = crate::model::geom::bearing_deg(to.x, to.y);
    entities.insert(
        EntityId::CAMERA,
        EntityState {
            info: EntityInfo { id: EntityId::CAMERA, kind: EntityKind::Camera, name: "camera".into() },
            pose: Pose { position: camera_pos, yaw_deg: yaw },
            region: graph.region_plan.first().cloned().unwrap_or_default(),
        },
    );

    let pois = episode
        .regions
        .iter()
        .enumerate()
        .flat_map(|(ri, r)| {
            r.pois.iter().map(move |p| (p.key.clone(), PoiPlace { position: p.position, heading_deg: p.heading_deg, region_index: ri }))
        })
        .collect();

    let give_actions =
        registry.actions.values().filter(|a| a.transfer == Some(Transfer::Give)).map(|a| a.key.clone()).collect();

    Ok(World {
        pois,
        give_actions,
        episode: episode.key.clone(),
        fps: cfg.fps,
        walk_speed: cfg.walk_speed,
        camera_policy: cfg.camera.clone(),
        settle_frames: cfg.settle_frames,
        entities,
        actor_offsets,
        object_slots,
    })
}

/// Where a held object sits relative to its holder.
pub(crate) fn carried_position(holder: Pose) -> Vec3 {
    let yaw = holder.yaw_deg.to_radians();
    holder.position + Vec3::new(0.3 * yaw.sin(), 0.3 * yaw.cos(), 1.0)
}

/// Frames needed to walk `distance` meters, never exceeding the walk speed.
pub fn movement_frames(distance: f64, walk_speed: f64, fps: u32) -> i64 {
    let exact = distance / walk_speed * fps as f64;
    ((exact - 1e-9).ceil() as i64).max(1)
}

/// Inserts a walking event before every event whose POI differs from the
/// actor's previous POI. Existing movement events are kept, so the operation
/// is idempotent.
pub fn insert_movements(graph: &GestGraph, world: &World, registry: &CapabilityRegistry) -> GestGraph {
    let Some(episode) = registry.episode(&world.episode) else {
        return graph.clone();
    };
    let walk = registry.movement_action().map(|a| a.key.clone()).unwrap_or_else(|| "walk_to".into());
    let mut out = graph.clone();
    out.events.clear();
    let mut next_id = graph.next_event_id();
    let mut last_poi: BTreeMap<EntityId, String> = BTreeMap::new();
    for ev in &graph.events {
        let prev = last_poi.get(&ev.actor).cloned();
        if let Some(prev) = prev {
            if prev != ev.poi && ev.kind != EventKind::Movement {
                let (Some(a), Some(b)) = (episode.poi(&prev), episode.poi(&ev.poi)) else {
                    out.events.push(ev.clone());
                    continue;
                };
                let frames = movement_frames(a.position.distance(b.position), world.walk_speed, world.fps);
                out.events.push(Event {
                    event_id: next_id,
                    actor: ev.actor,
                    action: walk.clone(),
                    patient: None,
                    item: None,
                    poi: ev.poi.clone(),
                    duration_s: frames as f64 / world.fps as f64,
                    kind: EventKind::Movement,
                });
                next_id += 1;
            }
        }
        last_poi.insert(ev.actor, ev.poi.clone());
        out.events.push(ev.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_meters_at_walking_pace() {
        assert_eq!(movement_frames(7.0, 1.4, 25), 125);
        assert_eq!(movement_frames(0.0, 1.4, 25), 1);
        assert_eq!(movement_frames(1.4001, 1.4, 25), 26);
    }
}
