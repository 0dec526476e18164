//! Corpus pipeline: generate, execute and annotate stories, and check the
//! result.

pub mod formats;
pub mod pipeline;
pub mod stats;
pub mod verify;

pub use pipeline::{assemble_story, directory_hash, generate_corpus, CorpusConfig, CorpusManifest, StoryEntry};
pub use stats::{compute_stats, CorpusStats};
pub use verify::{verify, VerifyReport};
