//! Replays the corpus invariants against the files on disk.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use gest_core::collectors::{compute_pair_relation, EventFrameMapping, SpatialRelationRecord};
use gest_core::model::{parse_graph, parse_registry, CapabilityRegistry, EntityId};
use gest_core::probes::{extract_clips, label_clip, ClipLabels, ClipSpec, Split};
use gest_core::temporal::{check_relation, graph_constraints, EventTimeline, FrameInterval};
use gest_core::textgen::proto_text;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::formats::{read_framelog, RawRecord, RelationsView};
use crate::pipeline::{read_manifest, sha256_hex, CorpusManifest, StoryEntry, StoryStatus, REGISTRY_FILE, STATS_FILE};
use crate::stats::{compute_stats, CorpusStats};

/// Spatial records re-derived per story.
const SAMPLED_RECORDS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub story: Option<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerifyReport {
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    fn push(&mut self, check: &str, story: Option<&str>, passed: bool, detail: impl Into<String>) {
        self.results.push(CheckResult { check: check.into(), story: story.map(str::to_string), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }

    /// Pass and total counts per check name.
    pub fn summary(&self) -> BTreeMap<&str, (usize, usize)> {
        let mut out: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for r in &self.results {
            let e = out.entry(r.check.as_str()).or_default();
            e.0 += r.passed as usize;
            e.1 += 1;
        }
        out
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (check, (ok, total)) in self.summary() {
            writeln!(f, "{} {check}: {ok}/{total}", if ok == total { "PASS" } else { "FAIL" })?;
        }
        for r in self.failures() {
            writeln!(f, "  {} {}: {}", r.check, r.story.as_deref().unwrap_or("corpus"), r.detail)?;
        }
        Ok(())
    }
}

/// Runs every check. Problems are reported, never raised.
pub fn verify(dir: &Path) -> VerifyReport {
    let mut report = VerifyReport::default();
    let manifest = match read_manifest(dir) {
        Ok(m) => m,
        Err(e) => {
            report.push("manifest", None, false, e.to_string());
            return report;
        }
    };
    report.push("manifest", None, true, "");
    for (name, hash) in &manifest.files {
        let ok = fs::read(dir.join(name)).map(|b| &sha256_hex(&b) == hash).unwrap_or(false);
        report.push("hashes", None, ok, if ok { String::new() } else { format!("{name} does not match") });
    }
    let registry = match fs::read(dir.join(REGISTRY_FILE)).ok().and_then(|b| parse_registry(&b).ok()) {
        Some(r) => r,
        None => {
            report.push("registry", None, false, "registry.json unreadable");
            return report;
        }
    };
    for story in manifest.stories.iter().filter(|s| s.status == StoryStatus::Ok) {
        verify_story(dir, &manifest, story, &registry, &mut report);
    }
    match (compute_stats(dir), fs::read(dir.join(STATS_FILE))) {
        (Ok(fresh), Ok(bytes)) => {
            let stored: Option<CorpusStats> = serde_json::from_slice(&bytes).ok();
            let ok = stored.as_ref() == Some(&fresh);
            report.push("stats", None, ok, if ok { String::new() } else { "stats.json differs from a rescan".into() });
        }
        (Err(e), _) => report.push("stats", None, false, e.to_string()),
        (_, Err(e)) => report.push("stats", None, false, e.to_string()),
    }
    report
}

fn verify_story(dir: &Path, manifest: &CorpusManifest, story: &StoryEntry, registry: &CapabilityRegistry, report: &mut VerifyReport) {
    let id = story.story_id.as_str();
    let root = dir.join(id);
    let mut files = BTreeMap::new();
    let mut bad = Vec::new();
    for (name, hash) in &story.files {
        match fs::read(root.join(name)) {
            Ok(b) => {
                if &sha256_hex(&b) != hash {
                    bad.push(name.clone());
                }
                files.insert(name.clone(), b);
            }
            Err(_) => bad.push(format!("{name} (missing)")),
        }
    }
    report.push("hashes", Some(id), bad.is_empty(), bad.join(", "));

    let get = |name: &str| files.get(name).map(Vec::as_slice).unwrap_or(&[]);
    let Ok(graph) = parse_graph(get("graph.json")) else {
        report.push("schedule", Some(id), false, "graph.json unreadable");
        return;
    };
    let Ok(timeline) = serde_json::from_slice::<EventTimeline>(get("timeline.json")) else {
        report.push("schedule", Some(id), false, "timeline.json unreadable");
        return;
    };

    // Relations are checked against the emitted event-frame mappings.
    let mappings: Vec<EventFrameMapping> =
        get("events.jsonl").split(|b| *b == b'\n').filter(|l| !l.is_empty()).filter_map(|l| serde_json::from_slice(l).ok()).collect();
    let spans: BTreeMap<u32, FrameInterval> = mappings.iter().map(|m| (m.event_id, FrameInterval::new(m.start_frame, m.end_frame))).collect();
    let mut problems = Vec::new();
    if spans != timeline.intervals {
        problems.push("events.jsonl disagrees with timeline.json".to_string());
    }
    for e in &graph.events {
        if !spans.contains_key(&e.event_id) {
            problems.push(format!("event {} has no frame mapping", e.event_id));
        }
    }
    let explicit = graph.relations.iter().map(|r| (r.source, r.target, r.allen_set));
    for (a, b, set) in graph_constraints(&graph).into_iter().chain(explicit) {
        if let (Some(sa), Some(sb)) = (spans.get(&a), spans.get(&b)) {
            if !check_relation(*sa, *sb, set) {
                problems.push(format!("events {a} and {b} violate {:?}", set.names()));
            }
        }
    }
    report.push("schedule", Some(id), problems.is_empty(), problems.join("; "));

    let Ok(log) = read_framelog(get("framelog.bin")) else {
        report.push("spatial", Some(id), false, "framelog.bin unreadable");
        return;
    };
    match RelationsView::parse(get("relations.bin")) {
        Err(e) => report.push("spatial", Some(id), false, e.to_string()),
        Ok(view) => {
            let e = log.entities.len();
            let mut problems = Vec::new();
            if view.entities != log.entities {
                problems.push("entity tables differ".to_string());
            }
            if view.len() != log.frame_count() * e * e.saturating_sub(1) {
                problems.push(format!("{} records for {} frames of {e} entities", view.len(), log.frame_count()));
            }
            let mut prev: Option<(u32, u16, u16)> = None;
            for r in view.iter() {
                let key = (r.frame, r.a, r.b);
                if prev.is_some_and(|p| p >= key) {
                    problems.push(format!("records out of order at {key:?}"));
                    break;
                }
                prev = Some(key);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(story.seed);
            for _ in 0..SAMPLED_RECORDS.min(view.len()) {
                let raw = view.record(rng.gen_range(0..view.len()));
                let pose = |id: u16| log.pose(raw.frame as usize, EntityId(id as u32));
                let (Some(pa), Some(pb)) = (pose(raw.a), pose(raw.b)) else {
                    problems.push(format!("record {:?} names unknown entities", (raw.frame, raw.a, raw.b)));
                    break;
                };
                let fresh = RawRecord::from_record(&SpatialRelationRecord {
                    frame: raw.frame,
                    a: EntityId(raw.a as u32),
                    b: EntityId(raw.b as u32),
                    relation: compute_pair_relation(pa, pb),
                });
                if fresh != raw {
                    problems.push(format!("record {:?} does not recompute", (raw.frame, raw.a, raw.b)));
                    break;
                }
            }
            report.push("spatial", Some(id), problems.is_empty(), problems.join("; "));
        }
    }

    let text = proto_text(&graph, &timeline, registry);
    let ok = get("text.txt") == format!("{}\n", text.full_text).as_bytes();
    report.push("text", Some(id), ok, if ok { "" } else { "text.txt differs from regenerated text" });

    let cfg = &manifest.config.probes;
    let split = story.split.unwrap_or(Split::Train);
    let clips = extract_clips(id, &graph, &timeline, registry, split, cfg);
    let stored: Vec<ClipSpec> = parse_lines(get("probes/clips.jsonl"));
    let labels: Vec<ClipLabels> = parse_lines(get("probes/labels.jsonl"));
    let fresh: Result<Vec<ClipLabels>, _> = clips.iter().map(|c| label_clip(c, &log, &timeline, cfg)).collect();
    let ok = stored == clips && fresh.as_ref().is_ok_and(|f| *f == labels);
    report.push("probes", Some(id), ok, if ok { "" } else { "clips or labels differ from recomputation" });
}

fn parse_lines<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Vec<T> {
    bytes.split(|b| *b == b'\n').filter(|l| !l.is_empty()).filter_map(|l| serde_json::from_slice(l).ok()).collect()
}
