use std::collections::BTreeMap;

use super::camera::{focus_region, update_camera};
use super::ground::carried_position;
use super::{EntityInfo, FrameLog, Pose, World};
use crate::model::geom::bearing_deg;
use crate::model::{EntityId, EntityKind, Event, EventKind, GestGraph, Vec3};
use crate::temporal::{EventTimeline, FrameInterval};

struct Step<'g> {
    span: FrameInterval,
    event: &'g Event,
    /// Where a movement starts from.
    origin: Vec3,
    target: Vec3,
    yaw: f64,
}

/// Executes a scheduled story frame by frame.
///
/// Walking actors move in a straight line and arrive on the last frame of the
/// movement; actors busy with a stationary event stand at their spot of the
/// event POI; idle actors hold their last pose. The log covers the timeline
/// makespan plus the settle margin.
pub fn simulate(world: &World, graph: &GestGraph, timeline: &EventTimeline) -> FrameLog {
    let spot = |actor: EntityId, poi: &str| -> Vec3 {
        let base = world.pois.get(poi).map(|p| p.position).unwrap_or(Vec3::ZERO);
        base + world.actor_offsets.get(&actor).copied().unwrap_or(Vec3::ZERO)
    };

    let mut plans: BTreeMap<EntityId, Vec<Step<'_>>> = BTreeMap::new();
    for actor in &graph.actors {
        let mut evs: Vec<(FrameInterval, &Event)> =
            graph.events.iter().filter(|e| e.actor == actor.id).filter_map(|e| timeline.get(e.event_id).map(|s| (s, e))).collect();
        evs.sort_by_key(|(s, e)| (s.start, e.event_id));
        let mut here = world.entities.get(&actor.id).map(|s| s.pose.position).unwrap_or(Vec3::ZERO);
        let mut steps = Vec::with_capacity(evs.len());
        for (span, ev) in evs {
            let target = spot(actor.id, &ev.poi);
            let heading = world.pois.get(&ev.poi).map(|p| p.heading_deg).unwrap_or(0.0);
            let yaw = match ev.kind {
                EventKind::Movement => {
                    let d = target - here;
                    if d.horizontal_norm() > 1e-12 { bearing_deg(d.x, d.y) } else { heading }
                }
                k if k.is_paired() => match graph.partner_event(ev.event_id) {
                    Some(p) => {
                        let d = spot(p.actor, &p.poi) - target;
                        if d.horizontal_norm() > 1e-9 { bearing_deg(d.x, d.y) } else { heading }
                    }
                    None => heading,
                },
                _ => heading,
            };
            steps.push(Step { span, event: ev, origin: here, target, yaw });
            here = target;
        }
        plans.insert(actor.id, steps);
    }

    // Ownership changes, applied at the end frame of each giving event.
    let mut flips: Vec<(i64, u32, EntityId, EntityId)> = graph
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Exchange && world.give_actions.contains(&e.action))
        .filter_map(|e| Some((timeline.get(e.event_id)?.end, e.event_id, e.item?, e.patient?)))
        .collect();
    flips.sort();
    let mut owner: BTreeMap<EntityId, Option<EntityId>> = graph.objects.iter().map(|o| (o.id, o.owner)).collect();

    let infos: Vec<EntityInfo> = world.entities.values().map(|s| s.info.clone()).collect();
    let index: BTreeMap<EntityId, usize> = infos.iter().enumerate().map(|(i, e)| (e.id, i)).collect();
    let mut poses: Vec<Pose> = world.entities.values().map(|s| s.pose).collect();
    let mut cursor: BTreeMap<EntityId, usize> = plans.keys().map(|a| (*a, 0)).collect();
    let mut next_flip = 0;

    let frames = timeline.makespan().max(0) + world.settle_frames as i64;
    let mut log = FrameLog::new(world.fps, infos.clone());
    for f in 0..frames {
        let mut active: Vec<(usize, Vec3)> = Vec::new();
        for (actor, steps) in &plans {
            let c = cursor.get_mut(actor).expect("cursor per actor");
            while *c < steps.len() && steps[*c].span.end <= f {
                *c += 1;
            }
            let Some(step) = steps.get(*c).filter(|s| s.span.contains(f)) else { continue };
            let pose = &mut poses[index[actor]];
            if step.event.kind == EventKind::Movement {
                let t = (f - step.span.start + 1) as f64 / step.span.len() as f64;
                pose.position = step.origin.lerp(step.target, t);
            } else {
                pose.position = step.target;
            }
            pose.yaw_deg = step.yaw;
            let region = world.pois.get(&step.event.poi).map(|p| p.region_index).unwrap_or(0);
            active.push((region, pose.position));
        }

        while next_flip < flips.len() && flips[next_flip].0 <= f {
            let (_, _, item, receiver) = flips[next_flip];
            owner.insert(item, Some(receiver));
            next_flip += 1;
        }
        for (obj, holder) in &owner {
            let Some(&i) = index.get(obj) else { continue };
            poses[i] = match holder.and_then(|h| index.get(&h)) {
                Some(&h) => Pose { position: carried_position(poses[h]), yaw_deg: poses[h].yaw_deg },
                None => Pose { position: world.object_slots[obj].2, yaw_deg: 0.0 },
            };
        }

        let regions: Vec<usize> = active.iter().map(|a| a.0).collect();
        if let Some(focus) = focus_region(&regions) {
            let members: Vec<Vec3> = active.iter().filter(|a| a.0 == focus).map(|a| a.1).collect();
            let cam = index[&EntityId::CAMERA];
            poses[cam] = update_camera(poses[cam], &members, &world.camera_policy);
        }
        log.push_frame(&poses);
    }
    debug_assert!(log.entities.iter().all(|e| e.kind != EntityKind::Poi));
    log
}
