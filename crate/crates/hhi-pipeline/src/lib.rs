//! IO, deterministic stub backends, and the CLI for the HHI distillation
//! pipeline. The algorithms live in `hhi-core`; this crate adds JSONL and
//! CoNLL-U persistence, run manifests, the pipeline configuration file, and
//! desk-scale backend implementations.

pub mod backends;
pub mod cli;
pub mod config;
pub mod conllu;
pub mod embeddings;
pub mod error;
pub mod heuristic;
pub mod jsonl;
pub mod manifest;
pub mod stubs;
pub mod workers;

/// Bundled data files (also usable as standalone files under `data/`).
pub mod data {
    /// Generic-name lexicon, one name per line.
    pub const NAME_LEXICON: &str = include_str!("../data/names.txt");
    /// Benchmark banned-verb list, one verb per line.
    pub const BANNED_VERBS: &str = include_str!("../data/banned_verbs.txt");
    /// Caption-harvest pattern lists.
    pub const HARVEST_PATTERNS: &str = include_str!("../data/harvest_patterns.toml");
}
