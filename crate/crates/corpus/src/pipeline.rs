//! Story assembly and whole-corpus generation.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use gest_core::collectors::{collect_all, collect_event_mappings};
use gest_core::model::{serialize_graph, serialize_registry, CapabilityRegistry, GestGraph};
use gest_core::probes::{extract_clips, label_clip, split_stories, ProbeConfig, Split};
use gest_core::procgen::{generate_story, story_seed, GenConfig, ProcgenError};
use gest_core::sim::{execute_story, SimConfig, SimError};
use gest_core::temporal::SchedulePolicy;
use gest_core::textgen::{proto_text, refine, RefineConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::formats::{write_framelog, write_relations};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REGISTRY_FILE: &str = "registry.json";
pub const STATS_FILE: &str = "stats.json";

/// Everything that determines corpus content. Worker count is deliberately
/// absent: it never changes output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct CorpusConfig {
    pub generation: GenConfig,
    pub simulation: SimConfig,
    pub schedule: SchedulePolicy,
    pub probes: ProbeConfig,
    pub refine: RefineConfig,
    /// Also write relations.jsonl, a readable mirror of relations.bin.
    pub jsonl_relations: bool,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("generation failed: {0}")]
    Generate(#[from] ProcgenError),
    #[error("simulation failed: {0}")]
    Simulate(#[from] SimError),
    #[error("probe derivation failed: {0}")]
    Probe(#[from] gest_core::probes::ProbeError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoryStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryEntry {
    pub story_id: String,
    pub index: u64,
    pub seed: u64,
    pub status: StoryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Relative path within the story directory to sha256 hex.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format_version: u32,
    pub master_seed: u64,
    pub story_count: u64,
    pub registry_hash: String,
    pub config: CorpusConfig,
    /// Corpus-level files other than the manifest itself.
    pub files: BTreeMap<String, String>,
    pub stories: Vec<StoryEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn story_id(index: u64) -> String {
    format!("story_{index:05}")
}

fn json_line<T: Serialize>(out: &mut Vec<u8>, v: &T) {
    serde_json::to_writer(&mut *out, v).expect("serializable");
    out.push(b'\n');
}

fn json_doc<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

/// Executes a story and serializes every artifact, returning
/// (relative path, bytes) in a fixed order.
pub fn story_files(
    graph: &GestGraph,
    registry: &CapabilityRegistry,
    cfg: &CorpusConfig,
    story_id: &str,
    split: Split,
) -> Result<Vec<(String, Vec<u8>)>, PipelineError> {
    let run = execute_story(graph, registry, &cfg.simulation, &cfg.schedule)?;
    let mut files = Vec::new();
    files.push(("graph.json".to_string(), serialize_graph(&run.graph)));
    files.push(("timeline.json".to_string(), json_doc(&run.timeline)));

    let mut framelog = Vec::new();
    write_framelog(&mut framelog, &run.log).expect("in-memory write");
    files.push(("framelog.bin".to_string(), framelog));

    let e = run.log.entities.len();
    let mut relations = Vec::with_capacity(64 + run.log.frame_count() * e * e.saturating_sub(1) * crate::formats::RECORD_SIZE);
    write_relations(&mut relations, run.log.fps, &run.log.entities, collect_all(&run.log)).expect("in-memory write");
    files.push(("relations.bin".to_string(), relations));
    if cfg.jsonl_relations {
        let mut out = Vec::new();
        for r in collect_all(&run.log) {
            json_line(
                &mut out,
                &serde_json::json!({
                    "frame": r.frame, "a": r.a, "b": r.b,
                    "distance_m": r.relation.distance_m, "azimuth_deg": r.relation.azimuth_deg,
                    "elevation_deg": r.relation.elevation_deg, "compass": r.relation.compass,
                    "coincident": r.relation.coincident,
                }),
            );
        }
        files.push(("relations.jsonl".to_string(), out));
    }

    let mut events = Vec::new();
    for m in collect_event_mappings(&run.timeline, &run.graph) {
        json_line(&mut events, &m);
    }
    files.push(("events.jsonl".to_string(), events));

    let text = proto_text(&run.graph, &run.timeline, registry);
    files.push(("text.txt".to_string(), format!("{}\n", text.full_text).into_bytes()));
    if cfg.refine.endpoint.is_some() {
        files.push(("text.refined.txt".to_string(), format!("{}\n", refine(&text, &cfg.refine)).into_bytes()));
    }

    let clips = extract_clips(story_id, &run.graph, &run.timeline, registry, split, &cfg.probes);
    let mut clip_lines = Vec::new();
    let mut label_lines = Vec::new();
    for c in &clips {
        json_line(&mut clip_lines, c);
        json_line(&mut label_lines, &label_clip(c, &run.log, &run.timeline, &cfg.probes)?);
    }
    files.push(("probes/clips.jsonl".to_string(), clip_lines));
    files.push(("probes/labels.jsonl".to_string(), label_lines));
    Ok(files)
}

/// Writes files under `dir` and returns their hashes.
pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut hashes = BTreeMap::new();
    for (rel, bytes) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, bytes).map_err(io_err(&path))?;
        hashes.insert(rel.clone(), sha256_hex(bytes));
    }
    Ok(hashes)
}

/// Generates, executes and writes story `index` into `out/<story id>`.
pub fn assemble_story(
    cfg: &CorpusConfig,
    registry: &CapabilityRegistry,
    index: u64,
    out: &Path,
    split: Split,
) -> Result<StoryEntry, PipelineError> {
    let id = story_id(index);
    let graph = generate_story(&cfg.generation, registry, index)?;
    let files = story_files(&graph, registry, cfg, &id, split)?;
    let files = write_files(&out.join(&id), &files)?;
    Ok(StoryEntry {
        story_id: id,
        index,
        seed: graph.seed,
        status: StoryStatus::Ok,
        error: None,
        category: registry.episode(&graph.episode).map(|e| e.category.clone()),
        episode: Some(graph.episode),
        split: Some(split),
        files,
    })
}

/// Generates a whole corpus. Stories are first generated to fix the
/// stratified splits, then executed in parallel on `workers` threads. A
/// story that fails is recorded in the manifest and does not stop the run.
pub fn generate_corpus(
    cfg: &CorpusConfig,
    registry: &CapabilityRegistry,
    stories: u64,
    out: &Path,
    workers: usize,
) -> Result<CorpusManifest, PipelineError> {
    cfg.generation.validate()?;
    cfg.probes.validate().map_err(PipelineError::Config)?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let drafts: Vec<Result<GestGraph, ProcgenError>> =
        pool.install(|| (0..stories).into_par_iter().map(|i| generate_story(&cfg.generation, registry, i)).collect());
    let strata: Vec<(String, String)> = drafts
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let g = g.as_ref().ok()?;
            Some((story_id(i as u64), registry.episode(&g.episode)?.category.clone()))
        })
        .collect();
    let splits = split_stories(&strata, &cfg.probes, cfg.generation.master_seed);

    let entries: Vec<StoryEntry> = pool.install(|| {
        (0..stories)
            .into_par_iter()
            .map(|i| {
                let id = story_id(i);
                let failed = |e: String| {
                    log::warn!("{id}: {e}");
                    let _ = fs::remove_dir_all(out.join(&id));
                    StoryEntry {
                        story_id: id.clone(),
                        index: i,
                        seed: story_seed(cfg.generation.master_seed, i),
                        status: StoryStatus::Failed,
                        error: Some(e),
                        episode: None,
                        category: None,
                        split: None,
                        files: BTreeMap::new(),
                    }
                };
                match &drafts[i as usize] {
                    Err(e) => failed(e.to_string()),
                    Ok(_) => {
                        let split = splits.get(&id).copied().unwrap_or(Split::Train);
                        assemble_story(cfg, registry, i, out, split).unwrap_or_else(|e| failed(e.to_string()))
                    }
                }
            })
            .collect()
    });

    let registry_bytes = serialize_registry(registry);
    let registry_path = out.join(REGISTRY_FILE);
    fs::write(&registry_path, &registry_bytes).map_err(io_err(&registry_path))?;
    let registry_hash = sha256_hex(&registry_bytes);
    let mut manifest = CorpusManifest {
        format_version: MANIFEST_VERSION,
        master_seed: cfg.generation.master_seed,
        story_count: stories,
        registry_hash: registry_hash.clone(),
        config: cfg.clone(),
        files: BTreeMap::from([(REGISTRY_FILE.to_string(), registry_hash)]),
        stories: entries,
    };
    write_manifest(out, &manifest)?;

    let stats = crate::stats::compute_stats(out).map_err(|e| PipelineError::Config(e.to_string()))?;
    let stats_bytes = json_doc(&stats);
    let stats_path = out.join(STATS_FILE);
    fs::write(&stats_path, &stats_bytes).map_err(io_err(&stats_path))?;
    manifest.files.insert(STATS_FILE.to_string(), sha256_hex(&stats_bytes));
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

fn write_manifest(out: &Path, manifest: &CorpusManifest) -> Result<(), PipelineError> {
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, json_doc(manifest)).map_err(io_err(&path))
}

pub fn read_manifest(dir: &Path) -> io::Result<CorpusManifest> {
    let bytes = fs::read(dir.join(MANIFEST_FILE))?;
    serde_json::from_slice(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Hash of a directory tree: every file's relative path and contents, in
/// sorted path order.
pub fn directory_hash(dir: &Path) -> io::Result<String> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for rel in files {
        let bytes = fs::read(dir.join(&rel))?;
        let name = rel.to_string_lossy().replace('\\', "/");
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}
