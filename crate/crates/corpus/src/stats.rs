//! Corpus statistics, recomputed from the files on every call.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use gest_core::model::{parse_graph, parse_registry, EventKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{read_framelog, RelationsView};
use crate::pipeline::{read_manifest, sha256_hex, StoryStatus, REGISTRY_FILE};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("corrupt corpus: {path} does not match its manifest hash")]
    CorruptCorpus { path: PathBuf },
    #[error("{path}: {message}")]
    Unreadable { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Range {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl Range {
    fn of(values: &[u64]) -> Range {
        if values.is_empty() {
            return Range::default();
        }
        Range {
            min: *values.iter().min().unwrap(),
            max: *values.iter().max().unwrap(),
            mean: values.iter().sum::<u64>() as f64 / values.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CorpusStats {
    pub stories: u64,
    pub failed_stories: u64,
    pub total_frames: u64,
    pub total_duration_h: f64,
    /// Story events; inserted movements are counted separately.
    pub total_events: u64,
    pub movement_events: u64,
    pub temporal_relations: u64,
    pub unique_action_types: u64,
    pub object_types: u64,
    pub episodes: u64,
    pub categories: u64,
    pub actors_per_story: Range,
    pub events_per_story: Range,
    pub spatial_relations: u64,
    pub event_frame_mappings: u64,
    pub clips: u64,
}

fn read_checked(path: &Path, expected: &str) -> Result<Vec<u8>, StatsError> {
    let bytes = fs::read(path).map_err(|e| StatsError::Unreadable { path: path.to_path_buf(), message: e.to_string() })?;
    if sha256_hex(&bytes) != expected {
        return Err(StatsError::CorruptCorpus { path: path.to_path_buf() });
    }
    Ok(bytes)
}

fn unreadable(path: &Path, e: impl ToString) -> StatsError {
    StatsError::Unreadable { path: path.to_path_buf(), message: e.to_string() }
}

/// Rescans a corpus directory, checking every file listed in the manifest
/// against its hash.
pub fn compute_stats(dir: &Path) -> Result<CorpusStats, StatsError> {
    let manifest = read_manifest(dir).map_err(|e| unreadable(&dir.join("manifest.json"), e))?;
    let reg_path = dir.join(REGISTRY_FILE);
    let registry = parse_registry(&read_checked(&reg_path, &manifest.registry_hash)?).map_err(|e| unreadable(&reg_path, e))?;

    let mut s = CorpusStats::default();
    let (mut actions, mut objects, mut episodes, mut categories) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let (mut actors_per, mut events_per) = (Vec::new(), Vec::new());
    let mut seconds = 0.0;
    for story in &manifest.stories {
        if story.status != StoryStatus::Ok {
            s.failed_stories += 1;
            continue;
        }
        s.stories += 1;
        let root = dir.join(&story.story_id);
        let file = |name: &str| -> Result<Vec<u8>, StatsError> {
            let hash = story.files.get(name).ok_or_else(|| unreadable(&root.join(name), "not in manifest"))?;
            read_checked(&root.join(name), hash)
        };
        for name in story.files.keys() {
            if !matches!(name.as_str(), "graph.json" | "framelog.bin" | "relations.bin" | "events.jsonl" | "probes/clips.jsonl") {
                file(name)?;
            }
        }
        let graph = parse_graph(&file("graph.json")?).map_err(|e| unreadable(&root.join("graph.json"), e))?;
        let story_events = graph.events.iter().filter(|e| e.kind != EventKind::Movement).count() as u64;
        s.total_events += story_events;
        s.movement_events += graph.events.len() as u64 - story_events;
        s.temporal_relations += graph.relations.len() as u64;
        actions.extend(graph.events.iter().map(|e| e.action.clone()));
        objects.extend(graph.objects.iter().map(|o| o.type_key.clone()));
        if let Some(ep) = registry.episode(&graph.episode) {
            categories.insert(ep.category.clone());
        }
        episodes.insert(graph.episode.clone());
        actors_per.push(graph.actors.len() as u64);
        events_per.push(story_events);

        let log = read_framelog(&file("framelog.bin")?).map_err(|e| unreadable(&root.join("framelog.bin"), e))?;
        s.total_frames += log.frame_count() as u64;
        seconds += log.frame_count() as f64 / log.fps as f64;
        let rel = file("relations.bin")?;
        s.spatial_relations += RelationsView::parse(&rel).map_err(|e| unreadable(&root.join("relations.bin"), e))?.len() as u64;
        s.event_frame_mappings += count_lines(&file("events.jsonl")?);
        s.clips += count_lines(&file("probes/clips.jsonl")?);
    }
    s.total_duration_h = seconds / 3600.0;
    s.unique_action_types = actions.len() as u64;
    s.object_types = objects.len() as u64;
    s.episodes = episodes.len() as u64;
    s.categories = categories.len() as u64;
    s.actors_per_story = Range::of(&actors_per);
    s.events_per_story = Range::of(&events_per);
    Ok(s)
}

fn count_lines(bytes: &[u8]) -> u64 {
    bytes.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count() as u64
}
