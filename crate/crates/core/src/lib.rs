//! Measure and reduce representation bias and stereotypes in text corpora.
//!
//! A corpus is split into sentences, matched against per-group word lists
//! and scored with the demographic representation (DR) score. Stereotypical
//! sentences are found with a two-step LLM check and removed above a score
//! threshold. Counterfactual augmentation then swaps group words to
//! rebalance the corpus. Every LLM exchange can be recorded to a transcript
//! and replayed offline.
//!
//! ## Examples
//!
//! ```text
//! examples/
//! ├── dr_score.rs             # DR on fixed counts
//! ├── segment_rebuild.rs      # sentence spans and lossless rebuild
//! ├── scan_corpus.rs          # word-list matching and the DR report
//! ├── cumulative_dr.rs        # DR as word lists grow
//! ├── wordlist_generation.rs  # LLM word lists, expansion, frequency filter
//! ├── stereotype_filter.rs    # detection, assessment, scoring, removal
//! ├── base_cda.rs             # random one-sided swaps
//! ├── gc_cda.rs               # planned swaps with LLM choice and checks
//! ├── soct_probe.rs           # occupation completion probe
//! ├── transcript_replay.rs    # record and replay LLM calls
//! └── pipeline_replay.rs      # full run, resume and offline replay
//! ```
//!
//! ```bash
//! cargo run --example scan_corpus
//! cargo run --example pipeline_replay
//! ```
//!
//! None of the examples need network access; the LLM-backed ones use a
//! scripted endpoint.

pub mod cda;
pub mod corpus;
mod error;
pub mod llm;
pub mod pipeline;
pub mod prompts;
pub mod repbias;
pub mod soct;
pub mod stereotype;
pub mod wordlist;

pub use error::{Error, Result};
