//! Generated stories executed end to end, with the physical invariants
//! re-checked from the frame log.

use gest_core::model::{default_registry, EntityId, EntityKind, EventKind};
use gest_core::procgen::{generate_story, GenConfig};
use gest_core::sim::{execute_story, validate, SimConfig};
use gest_core::temporal::{check_relation, SchedulePolicy};

#[test]
fn generated_stories_validate() {
    let reg = default_registry();
    let cfg = GenConfig { master_seed: 11, ..GenConfig::default() };
    for i in 0..500 {
        let g = generate_story(&cfg, &reg, i).unwrap();
        if let Err(e) = validate(&g, &reg) {
            panic!("story {i}: {e:?}");
        }
    }
}

#[test]
fn execution_invariants() {
    let reg = default_registry();
    let cfg = GenConfig { master_seed: 5, ..GenConfig::default() };
    let sim = SimConfig::default();
    let step_limit = sim.walk_speed / sim.fps as f64 + 1e-6;
    for i in 0..12 {
        let story = generate_story(&cfg, &reg, i).unwrap();
        let run = execute_story(&story, &reg, &sim, &SchedulePolicy::default()).unwrap();
        let log = &run.log;
        let tl = &run.timeline;
        assert_eq!(log.frame_count() as i64, tl.makespan() + sim.settle_frames as i64);

        // Movement insertion keeps every original relation satisfied.
        for r in &story.relations {
            assert!(check_relation(tl.get(r.source).unwrap(), tl.get(r.target).unwrap(), r.allen_set));
        }
        let ep = reg.episode(&story.episode).unwrap();
        for ev in run.graph.events.iter().filter(|e| e.kind != EventKind::Movement) {
            let span = tl.get(ev.event_id).unwrap();
            let poi = ep.poi(&ev.poi).unwrap().position;
            for f in span.start..span.end {
                let p = log.pose(f as usize, ev.actor).unwrap().position;
                assert!(p.distance(poi) <= 0.6, "story {i} event {} frame {f}", ev.event_id);
            }
        }
        for (k, info) in log.entities.iter().enumerate() {
            for f in 0..log.frame_count() {
                let p = log.frame(f)[k].position;
                assert!(p.is_finite());
                if info.kind == EntityKind::Actor && f > 0 {
                    assert!(p.distance(log.frame(f - 1)[k].position) <= step_limit, "story {i} actor {:?} frame {f}", info.id);
                }
            }
        }
        assert_eq!(log.entities[0].id, EntityId::CAMERA);
        assert!(log.entities.windows(2).all(|w| w[0].id < w[1].id));
    }
}

#[test]
fn execution_is_deterministic() {
    let reg = default_registry();
    let cfg = GenConfig { master_seed: 8, ..GenConfig::default() };
    let story = generate_story(&cfg, &reg, 3).unwrap();
    let a = execute_story(&story, &reg, &SimConfig::default(), &SchedulePolicy::default()).unwrap();
    let b = execute_story(&story, &reg, &SimConfig::default(), &SchedulePolicy::default()).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.world, b.world);
}
