//! Template narration of a scheduled story, with optional refinement by an
//! external text service.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{CapabilityRegistry, EntityId, Event, EventKind, Gender, GestGraph, Transfer};
use crate::temporal::{CoarseRelation, EventTimeline, FrameInterval};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub event_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtoText {
    pub sentences: Vec<Sentence>,
    pub full_text: String,
}

struct Clause<'g> {
    subject: EntityId,
    event: &'g Event,
    event_ids: Vec<u32>,
    span: FrameInterval,
}

/// One sentence per event, or per interaction/exchange pair, in order of
/// start frame. An actor mentioned by the previous sentence in the same room
/// is referred to by pronoun.
pub fn proto_text(graph: &GestGraph, timeline: &EventTimeline, registry: &CapabilityRegistry) -> ProtoText {
    let episode = registry.episode(&graph.episode);
    let mut seen = BTreeSet::new();
    let mut clauses = Vec::new();
    for ev in graph.story_events() {
        if seen.contains(&ev.event_id) {
            continue;
        }
        let Some(span) = timeline.get(ev.event_id) else { continue };
        let mut event_ids = vec![ev.event_id];
        let mut lead = ev;
        if let Some(partner) = graph.partner_event(ev.event_id) {
            event_ids.push(partner.event_id);
            event_ids.sort_unstable();
            seen.insert(partner.event_id);
            // An exchange is told from the giving side.
            let gives = |e: &Event| registry.action(&e.action).and_then(|a| a.transfer) == Some(Transfer::Give);
            if ev.kind == EventKind::Exchange && !gives(ev) && gives(partner) {
                lead = partner;
            }
        }
        seen.insert(ev.event_id);
        clauses.push(Clause { subject: lead.actor, event: lead, event_ids, span });
    }
    clauses.sort_by_key(|c| (c.span.start, c.event_ids[0]));

    let name = |id: EntityId| graph.actor(id).map(|a| a.name.clone()).unwrap_or_else(|| format!("actor {}", id.0));
    let room = |poi: &str| {
        episode.and_then(|e| e.region_of_poi(poi)).map(|r| r.name.clone()).unwrap_or_else(|| poi.to_string())
    };
    let same_time = |a: &[u32], b: &[u32]| {
        graph.relations.iter().any(|r| {
            r.coarse == CoarseRelation::SameTime
                && ((a.contains(&r.source) && b.contains(&r.target)) || (b.contains(&r.source) && a.contains(&r.target)))
        })
    };

    let mut sentences: Vec<Sentence> = Vec::with_capacity(clauses.len());
    for (i, c) in clauses.iter().enumerate() {
        let here = room(&c.event.poi);
        let prev = i.checked_sub(1).map(|j| &clauses[j]);
        let pronoun = prev.is_some_and(|p| p.subject == c.subject && room(&p.event.poi) == here);
        let subject = if pronoun {
            match graph.actor(c.subject).map(|a| a.gender) {
                Some(Gender::Male) => "he".to_string(),
                _ => "she".to_string(),
            }
        } else {
            name(c.subject)
        };
        let verb = verb_phrase(c.event, graph, registry, &name);
        let connective = prev.map(|p| {
            if same_time(&p.event_ids, &c.event_ids) {
                "At the same time,"
            } else if p.span.end > c.span.start {
                "Meanwhile,"
            } else if p.subject == c.subject {
                "Then"
            } else {
                "After that,"
            }
        });
        let text = match connective {
            Some(conn) => format!("{conn} {subject} {verb} in the {here}."),
            None => format!("{} {verb} in the {here}.", capitalize(&subject)),
        };
        sentences.push(Sentence { text, event_ids: c.event_ids.clone() });
    }
    let full_text = sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
    ProtoText { sentences, full_text }
}

fn verb_phrase(ev: &Event, graph: &GestGraph, registry: &CapabilityRegistry, name: &dyn Fn(EntityId) -> String) -> String {
    let template = registry.action(&ev.action).map(|a| a.verb.clone()).unwrap_or_else(|| ev.action.replace('_', " "));
    let partner = ev.patient.filter(|p| graph.actor(*p).is_some()).map(name).unwrap_or_else(|| "someone".into());
    let object = ev
        .item
        .or(ev.patient)
        .and_then(|o| graph.object(o))
        .map(|o| CapabilityRegistry::object_type_name(&o.type_key))
        .unwrap_or_else(|| "item".into());
    template.replace("{partner}", &partner).replace("{object}", &object)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub const REFINE_TOKEN_ENV: &str = "REFINE_API_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub prompt: String,
    pub timeout_s: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: "default".into(),
            prompt: "Rewrite the following story in natural English. Keep every person, action, object and place, \
                     and keep the order of events."
                .into(),
            timeout_s: 30,
        }
    }
}

#[derive(Serialize)]
struct RefineRequest<'a> {
    prompt: &'a str,
    text: &'a str,
    model: &'a str,
}

#[derive(Deserialize)]
struct RefineResponse {
    text: String,
}

/// Rewrites the proto text through the configured endpoint. Any failure,
/// including a missing endpoint, returns the proto text unchanged.
pub fn refine(proto: &ProtoText, cfg: &RefineConfig) -> String {
    let Some(endpoint) = cfg.endpoint.as_deref() else {
        return proto.full_text.clone();
    };
    match request_refinement(endpoint, &proto.full_text, cfg) {
        Ok(text) if !text.trim().is_empty() => text,
        Ok(_) => {
            log::warn!("refinement returned empty text; keeping proto text");
            proto.full_text.clone()
        }
        Err(e) => {
            log::warn!("refinement failed: {e}; keeping proto text");
            proto.full_text.clone()
        }
    }
}

fn request_refinement(endpoint: &str, text: &str, cfg: &RefineConfig) -> Result<String, ureq::Error> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(cfg.timeout_s)))
        .http_status_as_error(true)
        .build()
        .into();
    let mut req = agent.post(endpoint);
    if let Ok(token) = std::env::var(REFINE_TOKEN_ENV) {
        req = req.header("Authorization", &format!("Bearer {token}"));
    }
    let body = RefineRequest { prompt: &cfg.prompt, text, model: &cfg.model };
    let resp: RefineResponse = req.send_json(&body)?.into_body().read_json()?;
    Ok(resp.text)
}
