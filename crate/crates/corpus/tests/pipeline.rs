use std::fs;
use std::path::Path;

use gest_core::model::default_registry;
use gest_core::probes::Split;
use gest_corpus::{assemble_story, compute_stats, directory_hash, generate_corpus, verify, CorpusConfig};

fn small_corpus(dir: &Path, stories: u64, seed: u64) {
    let mut cfg = CorpusConfig::default();
    cfg.generation.master_seed = seed;
    generate_corpus(&cfg, &default_registry(), stories, dir, 1).unwrap();
}

#[test]
fn story_inventory_and_repeatability() {
    let reg = default_registry();
    let cfg = CorpusConfig::default();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let entry = assemble_story(&cfg, &reg, 3, a.path(), Split::Val).unwrap();
    assemble_story(&cfg, &reg, 3, b.path(), Split::Val).unwrap();
    assert_eq!(entry.story_id, "story_00003");
    let names: Vec<&str> = entry.files.keys().map(String::as_str).collect();
    assert_eq!(
        names,
        [
            "events.jsonl",
            "framelog.bin",
            "graph.json",
            "probes/clips.jsonl",
            "probes/labels.jsonl",
            "relations.bin",
            "text.txt",
            "timeline.json"
        ]
    );
    assert_eq!(directory_hash(a.path()).unwrap(), directory_hash(b.path()).unwrap());
    let clips = fs::read_to_string(a.path().join("story_00003/probes/clips.jsonl")).unwrap();
    assert!(clips.lines().all(|l| l.contains("\"split\":\"val\"")));
}

#[test]
fn clean_corpus_verifies() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 3, 11);
    let report = verify(dir.path());
    assert!(report.passed(), "{report}");
    for check in ["manifest", "hashes", "schedule", "spatial", "probes", "stats"] {
        assert!(report.summary().contains_key(check), "missing check {check}");
    }
}

#[test]
fn flipped_relation_byte_is_localized() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 3, 12);
    let path = dir.path().join("story_00001/relations.bin");
    let mut bytes = fs::read(&path).unwrap();
    let at = bytes.len() - 10;
    bytes[at] ^= 0x40;
    fs::write(&path, bytes).unwrap();
    let report = verify(dir.path());
    assert!(!report.passed());
    let failing: Vec<_> = report.failures().collect();
    assert!(failing.iter().any(|r| r.check == "hashes" && r.story.as_deref() == Some("story_00001")), "{report}");
    assert!(failing.iter().all(|r| r.story.as_deref() == Some("story_00001") || r.check == "stats"), "{report}");
}

#[test]
fn edited_end_frame_fails_schedule_check() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 1, 13);
    let path = dir.path().join("story_00000/events.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // Stretch the first event well into whatever follows it.
    let id = lines[0]["event_id"].as_u64().unwrap();
    let end = lines[0]["end_frame"].as_i64().unwrap();
    lines[0]["end_frame"] = (end + 5000).into();
    let out: String = lines.iter().map(|v| format!("{v}\n")).collect();
    fs::write(&path, out).unwrap();
    let report = verify(dir.path());
    let schedule: Vec<_> = report.failures().filter(|r| r.check == "schedule").collect();
    assert!(!schedule.is_empty(), "{report}");
    assert!(schedule.iter().any(|r| r.detail.contains(&id.to_string())), "{report}");
}

#[test]
fn stats_of_one_story() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 1, 14);
    let stats = compute_stats(dir.path()).unwrap();
    assert_eq!(stats.stories, 1);
    assert_eq!(stats.failed_stories, 0);
    assert_eq!(stats.actors_per_story.min, stats.actors_per_story.max);
    assert!(stats.total_frames > 0);
    assert!(stats.spatial_relations > 0);
    let stored: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stored, serde_json::to_value(&stats).unwrap());
}

#[test]
fn stats_rejects_tampered_files() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 1, 15);
    let path = dir.path().join("story_00000/text.txt");
    fs::write(&path, "Someone did something.\n").unwrap();
    assert!(compute_stats(dir.path()).is_err());
}
