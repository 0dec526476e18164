use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gest_core::model::{default_registry, parse_graph, parse_registry, CapabilityRegistry};
use gest_core::probes::{extract_clips, label_clip, ProbeConfig, Split};
use gest_core::temporal::EventTimeline;
use gest_core::textgen::proto_text;
use gest_corpus::formats::read_framelog;
use gest_corpus::pipeline::{read_manifest, story_files, write_files, StoryStatus, REGISTRY_FILE};
use gest_corpus::{compute_stats, generate_corpus, verify, CorpusConfig};

#[derive(Parser)]
#[command(name = "gest", version, about = "Generate and check procedural multi-actor story corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of stories with all annotations.
    Generate(GenerateArgs),
    /// Execute one story graph and write its artifacts.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fps: Option<u32>,
    },
    /// Print the narration of a scheduled story.
    Text {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        timeline: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Re-derive probe clips and labels for a corpus with other settings.
    Probes(ProbeArgs),
    /// Print corpus statistics computed from the files.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Check a corpus against its manifest and invariants.
    Verify {
        #[arg(long)]
        corpus: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    stories: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Capability registry; the bundled one is used when absent.
    #[arg(long)]
    registry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// JSON file with a full corpus configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    chains_per_actor: Option<u32>,
    #[arg(long)]
    max_actors_per_region: Option<u32>,
    #[arg(long)]
    regions: Option<u32>,
    #[arg(long)]
    fps: Option<u32>,
    /// Also write a JSON-lines mirror of each relations file.
    #[arg(long)]
    jsonl_relations: bool,
    #[arg(long)]
    refine_endpoint: Option<String>,
    #[arg(long)]
    refine_model: Option<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    motion_threshold: Option<f64>,
    #[arg(long)]
    min_event_seconds: Option<f64>,
    #[arg(long)]
    ambiguity_eps_m: Option<f64>,
    #[arg(long)]
    ambiguity_eps_deg: Option<f64>,
}

fn load_registry(path: Option<&Path>) -> Result<CapabilityRegistry> {
    match path {
        None => Ok(default_registry()),
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            parse_registry(&bytes).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let registry = load_registry(args.registry.as_deref())?;
    let mut cfg: CorpusConfig = match &args.config {
        Some(p) => serde_json::from_slice(&fs::read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => CorpusConfig::default(),
    };
    cfg.generation.master_seed = args.seed;
    if let Some(k) = args.chains_per_actor {
        cfg.generation.chains_per_actor = k;
    }
    if let Some(m) = args.max_actors_per_region {
        cfg.generation.max_actors_per_region = m;
    }
    if let Some(r) = args.regions {
        cfg.generation.regions_to_visit = r;
    }
    if let Some(f) = args.fps {
        if f == 0 || f > u16::MAX as u32 {
            bail!("--fps must be between 1 and {}", u16::MAX);
        }
        cfg.simulation.fps = f;
    }
    cfg.jsonl_relations |= args.jsonl_relations;
    if args.refine_endpoint.is_some() {
        cfg.refine.endpoint = args.refine_endpoint;
    }
    if let Some(m) = args.refine_model {
        cfg.refine.model = m;
    }
    let workers = args.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let manifest = generate_corpus(&cfg, &registry, args.stories, &args.out, workers)?;
    let failed = manifest.stories.iter().filter(|s| s.status == StoryStatus::Failed).count();
    println!("wrote {} stories to {} ({failed} failed)", manifest.stories.len() - failed, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn simulate(graph: &Path, registry: Option<&Path>, out: &Path, fps: Option<u32>) -> Result<ExitCode> {
    let registry = load_registry(registry)?;
    let graph = parse_graph(&fs::read(graph)?).with_context(|| format!("parsing {}", graph.display()))?;
    let mut cfg = CorpusConfig::default();
    if let Some(f) = fps {
        cfg.simulation.fps = f;
    }
    let id = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "story".into());
    let files = story_files(&graph, &registry, &cfg, &id, Split::Train)?;
    write_files(out, &files)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn text(graph: &Path, timeline: &Path, registry: Option<&Path>) -> Result<ExitCode> {
    let registry = load_registry(registry)?;
    let graph = parse_graph(&fs::read(graph)?).with_context(|| format!("parsing {}", graph.display()))?;
    let timeline: EventTimeline = serde_json::from_slice(&fs::read(timeline)?).context("parsing timeline")?;
    println!("{}", proto_text(&graph, &timeline, &registry).full_text);
    Ok(ExitCode::SUCCESS)
}

fn probes(args: ProbeArgs) -> Result<ExitCode> {
    let manifest = read_manifest(&args.corpus).context("reading manifest")?;
    let registry = load_registry(Some(&args.corpus.join(REGISTRY_FILE)))?;
    let mut cfg: ProbeConfig = manifest.config.probes.clone();
    if let Some(v) = args.motion_threshold {
        cfg.motion_threshold_m = v;
    }
    if let Some(v) = args.min_event_seconds {
        cfg.min_event_s = v;
    }
    if let Some(v) = args.ambiguity_eps_m {
        cfg.ambiguity_eps_m = v;
    }
    if let Some(v) = args.ambiguity_eps_deg {
        cfg.ambiguity_eps_deg = v;
    }
    cfg.validate().map_err(anyhow::Error::msg)?;
    let mut total = 0;
    for story in manifest.stories.iter().filter(|s| s.status == StoryStatus::Ok) {
        let root = args.corpus.join(&story.story_id);
        let graph = parse_graph(&fs::read(root.join("graph.json"))?)?;
        let timeline: EventTimeline = serde_json::from_slice(&fs::read(root.join("timeline.json"))?)?;
        let log = read_framelog(&fs::read(root.join("framelog.bin"))?)?;
        let clips = extract_clips(&story.story_id, &graph, &timeline, &registry, story.split.unwrap_or(Split::Train), &cfg);
        let (mut c, mut l) = (String::new(), String::new());
        for clip in &clips {
            c.push_str(&serde_json::to_string(clip)?);
            c.push('\n');
            l.push_str(&serde_json::to_string(&label_clip(clip, &log, &timeline, &cfg)?)?);
            l.push('\n');
        }
        let dir = args.out.join(&story.story_id);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("clips.jsonl"), c)?;
        fs::write(dir.join("labels.jsonl"), l)?;
        total += clips.len();
    }
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("probe_config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;
    println!("wrote {total} clips to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Simulate { graph, registry, out, fps } => simulate(&graph, registry.as_deref(), &out, fps),
        Command::Text { graph, timeline, registry } => text(&graph, &timeline, registry.as_deref()),
        Command::Probes(args) => probes(args),
        Command::Stats { corpus } => {
            let stats = compute_stats(&corpus)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { corpus } => {
            let report = verify(&corpus);
            print!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
