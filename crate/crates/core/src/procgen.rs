//! Procedural story generation driven by the capability registry.
//!
//! A story visits a sequence of regions. All actors start in the first
//! region; after each region a random subset migrates to the next one. Within
//! a region every present actor runs a few action chains at POIs, pairs of
//! actors interact or hand over objects, and cross-actor temporal relations
//! are injected while the network stays consistent.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::graph::GRAPH_FORMAT_VERSION;
use crate::model::{
    Actor, CapabilityRegistry, EntityId, EpisodeSpec, Event, EventKind, Gender, GestGraph, ObjectEntity,
    PoiSpec, TemporalRelation, Transfer,
};
use crate::temporal::{coarse_to_allen, graph_network, schedule, CoarseRelation, SchedulePolicy, TemporalNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub chains_per_actor: u32,
    pub chain_length_min_max: [u32; 2],
    pub max_actors_per_region: u32,
    pub regions_to_visit: u32,
    pub actors_min_max: [u32; 2],
    /// Each actor beyond the minimum is added with this probability.
    pub extra_actor_prob: f64,
    pub interaction_prob: f64,
    pub exchange_prob: f64,
    pub relation_prob: f64,
    pub migrate_fraction: f64,
    /// Chance that an actor starts out carrying a small object.
    pub carry_prob: f64,
    pub events_min_max: [u32; 2],
    pub master_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            chains_per_actor: 2,
            chain_length_min_max: [1, 4],
            max_actors_per_region: 6,
            regions_to_visit: 2,
            actors_min_max: [2, 6],
            extra_actor_prob: 0.36,
            interaction_prob: 0.3,
            exchange_prob: 0.15,
            relation_prob: 0.5,
            migrate_fraction: 0.5,
            carry_prob: 0.5,
            events_min_max: [7, 65],
            master_seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ProcgenError> {
        let probs = [
            ("extra_actor_prob", self.extra_actor_prob),
            ("interaction_prob", self.interaction_prob),
            ("exchange_prob", self.exchange_prob),
            ("relation_prob", self.relation_prob),
            ("migrate_fraction", self.migrate_fraction),
            ("carry_prob", self.carry_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProcgenError::Config(format!("{name} = {p} is not a probability")));
            }
        }
        let [lo, hi] = self.actors_min_max;
        if !(1 <= lo && lo <= hi && hi <= 16) {
            return Err(ProcgenError::Config(format!("actors_min_max {lo}..{hi} outside 1..16")));
        }
        let [clo, chi] = self.chain_length_min_max;
        if !(1 <= clo && clo <= chi) {
            return Err(ProcgenError::Config("chain_length_min_max must satisfy 1 <= min <= max".into()));
        }
        let [elo, ehi] = self.events_min_max;
        if elo > ehi || ehi == 0 {
            return Err(ProcgenError::Config("events_min_max must satisfy min <= max".into()));
        }
        if self.chains_per_actor == 0 || self.max_actors_per_region == 0 || self.regions_to_visit == 0 {
            return Err(ProcgenError::Config("counts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProcgenError {
    #[error("registry has no episodes to choose from")]
    EmptyRegistry,
    #[error("POI `{0}` has no valid stand-alone action")]
    NoValidAction(String),
    #[error("relation injection exhausted its retries for event {0}")]
    RelationInjectionExhausted(u32),
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("generated story failed to schedule: {0}")]
    Unschedulable(String),
}

/// Per-story seed derived from the corpus master seed and the story index.
pub fn story_seed(master_seed: u64, story_index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"gest-story");
    h.update(master_seed.to_le_bytes());
    h.update(story_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Two-stage uniform choice: category first, then an episode inside it.
pub fn select_episode<'r, R: Rng>(registry: &'r CapabilityRegistry, rng: &mut R) -> Result<&'r EpisodeSpec, ProcgenError> {
    let categories = registry.categories();
    let (_, episodes) = categories.choose(rng).ok_or(ProcgenError::EmptyRegistry)?;
    episodes.choose(rng).copied().ok_or(ProcgenError::EmptyRegistry)
}

/// One step of an action chain before it is attached to an actor.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSkeleton {
    pub action: String,
    pub poi: String,
    pub duration_s: f64,
}

pub fn sample_duration<R: Rng>(range: [f64; 2], rng: &mut R) -> f64 {
    let [lo, hi] = range;
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Follows the POI's transition map for up to `length` actions. The chain
/// stops early when the last action has no stand-alone successor.
pub fn build_action_chain<R: Rng>(
    poi: &PoiSpec,
    length: usize,
    registry: &CapabilityRegistry,
    rng: &mut R,
) -> Result<Vec<EventSkeleton>, ProcgenError> {
    chain_from(poi, None, length, registry, rng)
}

/// Like [`build_action_chain`], but the first action must be a valid
/// successor of `after`. Yields an empty chain when there is none.
pub fn continue_action_chain<R: Rng>(
    poi: &PoiSpec,
    after: &str,
    length: usize,
    registry: &CapabilityRegistry,
    rng: &mut R,
) -> Result<Vec<EventSkeleton>, ProcgenError> {
    chain_from(poi, Some(after), length, registry, rng)
}

fn chain_from<R: Rng>(
    poi: &PoiSpec,
    after: Option<&str>,
    length: usize,
    registry: &CapabilityRegistry,
    rng: &mut R,
) -> Result<Vec<EventSkeleton>, ProcgenError> {
    let solo = |key: &&String| registry.action(key).is_some_and(|a| a.is_solo());
    if !poi.valid_actions.iter().any(|a| solo(&a)) {
        return Err(ProcgenError::NoValidAction(poi.key.clone()));
    }
    let mut out = Vec::with_capacity(length);
    let mut previous: Option<String> = after.map(str::to_string);
    for _ in 0..length {
        let options: Vec<&String> = match &previous {
            None => poi.valid_actions.iter().filter(solo).collect(),
            Some(p) => poi.next_actions(p).iter().filter(solo).collect(),
        };
        let Some(&current) = options.choose(rng) else { break };
        let spec = registry.action(current).expect("solo action is declared");
        out.push(EventSkeleton {
            action: current.clone(),
            poi: poi.key.clone(),
            duration_s: sample_duration(spec.duration_range_s, rng),
        });
        previous = Some(current.clone());
    }
    Ok(out)
}

const FEMALE_NAMES: [&str; 10] = ["Anna", "Maria", "Elena", "Sofia", "Laura", "Clara", "Irina", "Julia", "Nora", "Eva"];
const MALE_NAMES: [&str; 10] = ["Ben", "David", "Mihai", "Paul", "Tom", "Victor", "Adrian", "Leo", "Mark", "Sam"];
const CARRYABLE: [&str; 2] = ["cup", "bottle"];
const RELATION_RETRIES: usize = 8;

/// Mutable state of a story under construction. Events live in an arena and
/// are renumbered once the story is complete.
struct Draft<'r> {
    registry: &'r CapabilityRegistry,
    episode: &'r EpisodeSpec,
    actors: Vec<Actor>,
    objects: Vec<ObjectEntity>,
    arena: Vec<Event>,
    /// Arena indices per (region position, actor), in chain order.
    sequences: BTreeMap<(usize, EntityId), Vec<usize>>,
    relations: Vec<(usize, usize, CoarseRelation)>,
    slot_use: BTreeMap<(String, String), usize>,
    /// Current holder of each carried object, in planning order.
    holder: BTreeMap<EntityId, EntityId>,
}

impl<'r> Draft<'r> {
    fn next_entity(&self) -> EntityId {
        let max = self.actors.iter().map(|a| a.id.0).chain(self.objects.iter().map(|o| o.id.0)).max().unwrap_or(0);
        EntityId(max + 1)
    }

    fn free_slots(&self, poi: &PoiSpec, type_key: &str) -> usize {
        let total = poi.object_slots.iter().filter(|s| *s == type_key).count();
        let used = self.slot_use.get(&(poi.key.clone(), type_key.to_string())).copied().unwrap_or(0);
        total.saturating_sub(used)
    }

    fn add_object(&mut self, poi: &PoiSpec, type_key: &str, owner: Option<EntityId>) -> EntityId {
        let id = self.next_entity();
        *self.slot_use.entry((poi.key.clone(), type_key.to_string())).or_default() += 1;
        self.objects.push(ObjectEntity { id, type_key: type_key.to_string(), owner, home_poi: poi.key.clone() });
        if let Some(o) = owner {
            self.holder.insert(id, o);
        }
        id
    }

    /// An unowned object of `type_key` at `poi`, created on first use.
    fn object_for(&mut self, poi: &PoiSpec, type_key: &str) -> Option<EntityId> {
        if let Some(o) = self.objects.iter().find(|o| o.owner.is_none() && o.home_poi == poi.key && o.type_key == type_key) {
            return Some(o.id);
        }
        (self.free_slots(poi, type_key) > 0).then(|| self.add_object(poi, type_key, None))
    }

    fn push_event(&mut self, ev: Event) -> usize {
        self.arena.push(ev);
        self.arena.len() - 1
    }

    fn story_event_count(&self) -> usize {
        self.arena.len()
    }
}

fn region_pois<'e>(episode: &'e EpisodeSpec, region: &str) -> Vec<&'e PoiSpec> {
    episode.region(region).map(|r| r.pois.iter().collect()).unwrap_or_default()
}

/// Appends chain steps for `actor`, binding object-using actions to objects
/// at the POI. Stops at the first step whose object cannot be placed.
fn append_chain(draft: &mut Draft<'_>, actor: EntityId, poi: &PoiSpec, chain: Vec<EventSkeleton>) -> Vec<usize> {
    let mut idxs = Vec::new();
    for sk in chain {
        let spec = draft.registry.action(&sk.action).expect("declared");
        let patient = match spec.object_type.clone() {
            Some(t) => match draft.object_for(poi, &t) {
                Some(o) => Some(o),
                None => break,
            },
            None => None,
        };
        idxs.push(draft.push_event(Event {
            event_id: 0,
            actor,
            action: sk.action,
            patient,
            item: None,
            poi: sk.poi,
            duration_s: sk.duration_s,
            kind: EventKind::Action,
        }));
    }
    idxs
}

/// Planned pair event before insertion into actor sequences.
struct PairPlan {
    phase: f64,
    first: usize,
    second: usize,
}

/// Plans interactions and exchanges among the actors present in a region.
/// Returns arena indices of the created pairs ordered by phase; each pair is
/// linked by a `same_time` relation.
fn plan_interactions<R: Rng>(
    draft: &mut Draft<'_>,
    region: &str,
    present: &[EntityId],
    budget: usize,
    rng: &mut R,
    cfg: &GenConfig,
) -> Vec<PairPlan> {
    let mut plans = Vec::new();
    if present.len() < 2 {
        return plans;
    }
    let pois = region_pois(draft.episode, region);
    let registry = draft.registry;
    let interaction_actions = |poi: &PoiSpec| -> Vec<String> {
        poi.valid_actions
            .iter()
            .filter(|a| registry.action(a).is_some_and(|s| s.event_kind == EventKind::Interaction))
            .cloned()
            .collect()
    };
    let exchange_action = |poi: &PoiSpec, transfer: Transfer| -> Option<String> {
        poi.valid_actions
            .iter()
            .find(|a| registry.action(a).is_some_and(|s| s.event_kind == EventKind::Exchange && s.transfer == Some(transfer)))
            .cloned()
    };

    // Draw the pair events first, then resolve exchanges in phase order so
    // object ownership is tracked consistently.
    struct Draw {
        phase: f64,
        a: EntityId,
        b: EntityId,
        exchange: bool,
        poi: usize,
        pick: u32,
    }
    let mut draws = Vec::new();
    for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            if rng.gen_bool(cfg.interaction_prob) {
                draws.push(Draw { phase: rng.gen(), a, b, exchange: false, poi: rng.gen_range(0..pois.len()), pick: rng.gen() });
            }
            if rng.gen_bool(cfg.exchange_prob) {
                draws.push(Draw { phase: rng.gen(), a, b, exchange: true, poi: rng.gen_range(0..pois.len()), pick: rng.gen() });
            }
        }
    }
    draws.sort_by(|x, y| x.phase.total_cmp(&y.phase));

    let mut used = 0usize;
    for d in draws {
        if used + 2 > budget {
            break;
        }
        let poi = pois[d.poi];
        let (actor_a, actor_b, action_a, action_b, item) = if d.exchange {
            // Either side may give, as long as it currently holds something.
            let held = |who: EntityId, h: &BTreeMap<EntityId, EntityId>| -> Option<EntityId> {
                h.iter().find(|(_, holder)| **holder == who).map(|(obj, _)| *obj)
            };
            let (giver, receiver, obj) = match (held(d.a, &draft.holder), held(d.b, &draft.holder)) {
                (Some(o), _) if d.pick % 2 == 0 => (d.a, d.b, o),
                (_, Some(o)) => (d.b, d.a, o),
                (Some(o), None) => (d.a, d.b, o),
                (None, None) => continue,
            };
            let (Some(give), Some(receive)) = (exchange_action(poi, Transfer::Give), exchange_action(poi, Transfer::Receive))
            else {
                continue;
            };
            draft.holder.insert(obj, receiver);
            (giver, receiver, give, receive, Some(obj))
        } else {
            let options = interaction_actions(poi);
            if options.is_empty() {
                continue;
            }
            let act = options[d.pick as usize % options.len()].clone();
            (d.a, d.b, act.clone(), act, None)
        };
        let spec = registry.action(&action_a).expect("declared");
        let duration_s = sample_duration(spec.duration_range_s, rng);
        let kind = spec.event_kind;
        let first = draft.push_event(Event {
            event_id: 0,
            actor: actor_a,
            action: action_a,
            patient: Some(actor_b),
            item,
            poi: poi.key.clone(),
            duration_s,
            kind,
        });
        let second = draft.push_event(Event {
            event_id: 0,
            actor: actor_b,
            action: action_b,
            patient: Some(actor_a),
            item,
            poi: poi.key.clone(),
            duration_s,
            kind,
        });
        draft.relations.push((first, second, CoarseRelation::SameTime));
        plans.push(PairPlan { phase: d.phase, first, second });
        used += 2;
    }
    plans
}

/// Injects cross-actor relations between events co-located in a region,
/// keeping the network path-consistent. A candidate that would make the
/// network inconsistent is resampled up to a fixed retry bound and then
/// dropped. Returns the accepted relations as (source, target, kind).
pub fn inject_relations<R: Rng>(
    graph: &GestGraph,
    region_of_event: &BTreeMap<u32, usize>,
    rng: &mut R,
    cfg: &GenConfig,
) -> Result<(Vec<TemporalRelation>, Vec<ProcgenError>), ProcgenError> {
    let mut net: TemporalNetwork = graph_network(graph)
        .and_then(|n| n.closure())
        .map_err(|e| ProcgenError::Unschedulable(e.to_string()))?;
    let mut related: BTreeSet<(u32, u32)> = graph
        .relations
        .iter()
        .map(|r| (r.source.min(r.target), r.source.max(r.target)))
        .collect();
    let mut accepted = Vec::new();
    let mut dropped = Vec::new();

    for ev in &graph.events {
        if !rng.gen_bool(cfg.relation_prob) {
            continue;
        }
        let region = region_of_event[&ev.event_id];
        let candidates: Vec<&Event> = graph
            .events
            .iter()
            .filter(|o| o.actor != ev.actor && region_of_event[&o.event_id] == region)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let mut placed = false;
        for _ in 0..RELATION_RETRIES {
            let other = candidates[rng.gen_range(0..candidates.len())];
            let coarse = CoarseRelation::ALL[rng.gen_range(0..3)];
            let key = (ev.event_id.min(other.event_id), ev.event_id.max(other.event_id));
            if related.contains(&key) {
                continue;
            }
            let set = coarse_to_allen(coarse);
            let mut trial = net.clone();
            if trial.add_and_propagate(ev.event_id, other.event_id, set).is_ok() {
                net = trial;
                related.insert(key);
                accepted.push(TemporalRelation { source: ev.event_id, target: other.event_id, coarse, allen_set: set });
                placed = true;
                break;
            }
        }
        if !placed {
            debug!("dropping relation for event {}", ev.event_id);
            dropped.push(ProcgenError::RelationInjectionExhausted(ev.event_id));
        }
    }
    Ok((accepted, dropped))
}

fn pick_name<R: Rng>(gender: Gender, taken: &BTreeSet<String>, rng: &mut R) -> String {
    let pool: &[&str] = match gender {
        Gender::Female => &FEMALE_NAMES,
        Gender::Male => &MALE_NAMES,
    };
    let free: Vec<&&str> = pool.iter().filter(|n| !taken.contains(**n)).collect();
    match free.choose(rng) {
        Some(n) => n.to_string(),
        None => format!("{} {}", pool[0], taken.len() + 1),
    }
}

fn pick_model<R: Rng>(registry: &CapabilityRegistry, gender: Gender, rng: &mut R) -> String {
    let prefix = match gender {
        Gender::Female => "female",
        Gender::Male => "male",
    };
    let matching: Vec<&String> = registry.actor_models.iter().filter(|m| m.starts_with(prefix)).collect();
    let pool = if matching.is_empty() { registry.actor_models.iter().collect() } else { matching };
    pool.choose(rng).map(|s| s.to_string()).unwrap_or_default()
}

/// Generates story `story_index` of the corpus described by `cfg`.
pub fn generate_story(cfg: &GenConfig, registry: &CapabilityRegistry, story_index: u64) -> Result<GestGraph, ProcgenError> {
    cfg.validate()?;
    let seed = story_seed(cfg.master_seed, story_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let episode = select_episode(registry, &mut rng)?;

    let mut order: Vec<usize> = (0..episode.regions.len()).collect();
    order.shuffle(&mut rng);
    order.truncate((cfg.regions_to_visit as usize).min(episode.regions.len()));
    let region_plan: Vec<String> = order.iter().map(|&i| episode.regions[i].key.clone()).collect();

    let mut draft = Draft {
        registry,
        episode,
        actors: Vec::new(),
        objects: Vec::new(),
        arena: Vec::new(),
        sequences: BTreeMap::new(),
        relations: Vec::new(),
        slot_use: BTreeMap::new(),
        holder: BTreeMap::new(),
    };

    // Actors, all created in the first region.
    let [amin, amax] = cfg.actors_min_max;
    let amax = amax.min(cfg.max_actors_per_region.max(amin));
    let extra = (0..amax - amin).filter(|_| rng.gen_bool(cfg.extra_actor_prob)).count() as u32;
    let n_actors = amin + extra;
    let mut names = BTreeSet::new();
    for i in 0..n_actors {
        let gender = if rng.gen_bool(0.5) { Gender::Female } else { Gender::Male };
        let name = pick_name(gender, &names, &mut rng);
        names.insert(name.clone());
        let model = pick_model(registry, gender, &mut rng);
        draft.actors.push(Actor { id: EntityId(i + 1), name, gender, model });
    }

    // Some actors start out carrying a cup or bottle picked up in the first region.
    let first_pois = region_pois(episode, &region_plan[0]);
    for i in 0..draft.actors.len() {
        if !rng.gen_bool(cfg.carry_prob) {
            continue;
        }
        let options: Vec<(&PoiSpec, &str)> = first_pois
            .iter()
            .flat_map(|p| CARRYABLE.iter().map(move |t| (*p, *t)))
            .filter(|(p, t)| draft.free_slots(p, t) >= 2)
            .collect();
        if let Some(&(poi, t)) = options.choose(&mut rng) {
            let owner = draft.actors[i].id;
            draft.add_object(poi, t, Some(owner));
        }
    }

    let [emin, emax] = cfg.events_min_max.map(|v| v as usize);
    let [lmin, lmax] = cfg.chain_length_min_max;
    let mut present: Vec<EntityId> = draft.actors.iter().map(|a| a.id).collect();

    for (ri, region) in region_plan.iter().enumerate() {
        let pois: Vec<&PoiSpec> = region_pois(episode, region)
            .into_iter()
            .filter(|p| p.valid_actions.iter().any(|a| registry.action(a).is_some_and(|s| s.is_solo())))
            .collect();
        if pois.is_empty() {
            return Err(ProcgenError::NoValidAction(region.clone()));
        }

        // Chains, grouped by chain index so interactions can slot in between.
        let mut chains: BTreeMap<EntityId, Vec<Vec<usize>>> = BTreeMap::new();
        for &actor in &present {
            let mut per_actor = Vec::new();
            let mut last: Option<(String, String)> = None;
            for _ in 0..cfg.chains_per_actor {
                let remaining = emax.saturating_sub(draft.story_event_count());
                if remaining == 0 {
                    break;
                }
                let poi = pois[rng.gen_range(0..pois.len())];
                let len = (rng.gen_range(lmin..=lmax) as usize).min(remaining);
                // Back-to-back chains at one POI must still follow its transitions.
                let chain = match &last {
                    Some((lp, la)) if *lp == poi.key => continue_action_chain(poi, la, len, registry, &mut rng)?,
                    _ => build_action_chain(poi, len, registry, &mut rng)?,
                };
                let idxs = append_chain(&mut draft, actor, poi, chain);
                if let Some(&i) = idxs.last() {
                    last = Some((draft.arena[i].poi.clone(), draft.arena[i].action.clone()));
                }
                per_actor.push(idxs);
            }
            chains.insert(actor, per_actor);
        }

        let budget = emax.saturating_sub(draft.story_event_count());
        let pairs = plan_interactions(&mut draft, region, &present, budget, &mut rng, cfg);

        // Interleave: an interaction with phase t goes after chain floor(t * (K + 1)),
        // so every actor sees the interactions in the same order.
        for &actor in &present {
            let actor_chains = chains.remove(&actor).unwrap_or_default();
            let k = actor_chains.len();
            let mut slots: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
            for p in &pairs {
                let mine = [p.first, p.second].into_iter().find(|&i| draft.arena[i].actor == actor);
                if let Some(idx) = mine {
                    let boundary = ((p.phase * (k + 1) as f64) as usize).min(k);
                    slots[boundary].push(idx);
                }
            }
            let mut seq = Vec::new();
            for (b, slot) in slots.into_iter().enumerate() {
                seq.extend(slot);
                if b < k {
                    seq.extend(&actor_chains[b]);
                }
            }
            draft.sequences.insert((ri, actor), seq);
        }

        if ri + 1 < region_plan.len() {
            let mut migrants: Vec<EntityId> =
                present.iter().copied().filter(|_| rng.gen_bool(cfg.migrate_fraction)).collect();
            if migrants.is_empty() {
                migrants.push(present[rng.gen_range(0..present.len())]);
            }
            present = migrants;
        }
    }

    // Top up short stories by extending the last active actor's final chain.
    while draft.story_event_count() < emin {
        let Some(&(ri, actor)) = draft.sequences.keys().next_back() else { break };
        let seq = &draft.sequences[&(ri, actor)];
        let last = seq.last().map(|&i| draft.arena[i].clone());
        let needed = emin - draft.story_event_count();
        let (poi, chain) = match last {
            Some(ev) => {
                let poi = episode.poi(&ev.poi).expect("poi in episode");
                let chain = if ev.kind == EventKind::Action {
                    continue_action_chain(poi, &ev.action, needed, registry, &mut rng)?
                } else {
                    build_action_chain(poi, needed, registry, &mut rng)?
                };
                (poi, chain)
            }
            None => {
                let poi = region_pois(episode, &region_plan[ri])[0];
                (poi, build_action_chain(poi, needed, registry, &mut rng)?)
            }
        };
        let idxs = append_chain(&mut draft, actor, poi, chain);
        if idxs.is_empty() {
            break;
        }
        draft.sequences.get_mut(&(ri, actor)).expect("sequence").extend(idxs);
    }

    // Renumber: region position, then actor, then chain order.
    let mut new_id = vec![u32::MAX; draft.arena.len()];
    let mut events = Vec::with_capacity(draft.arena.len());
    let mut region_of_event = BTreeMap::new();
    for (&(ri, _), seq) in &draft.sequences {
        for &idx in seq {
            let id = events.len() as u32;
            new_id[idx] = id;
            let mut ev = draft.arena[idx].clone();
            ev.event_id = id;
            events.push(ev);
            region_of_event.insert(id, ri);
        }
    }
    let relations: Vec<TemporalRelation> = draft
        .relations
        .iter()
        .map(|&(a, b, coarse)| TemporalRelation {
            source: new_id[a],
            target: new_id[b],
            coarse,
            allen_set: coarse_to_allen(coarse),
        })
        .collect();

    let mut graph = GestGraph {
        format_version: GRAPH_FORMAT_VERSION,
        seed,
        episode: episode.key.clone(),
        region_plan,
        actors: draft.actors,
        objects: draft.objects,
        events,
        relations,
    };

    let (injected, dropped) = inject_relations(&graph, &region_of_event, &mut rng, cfg)?;
    if !dropped.is_empty() {
        debug!("story {story_index}: dropped {} relation(s)", dropped.len());
    }
    graph.relations.extend(injected);

    // Executable by construction: the story must schedule as generated.
    schedule(&graph, registry, &SchedulePolicy::default(), 25).map_err(|e| ProcgenError::Unschedulable(e.to_string()))?;
    Ok(graph)
}
