//! Core types and algorithms for distilling free-text human-human interaction
//! (HHI) labels from noisy image captions, and for evaluating HHI predictors.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`names`] / [`types`]: the `[NAME]` slot currency shared by every stage;
//! - [`parse`]: ingested dependency parses (CoNLL-U compatible);
//! - [`extract`]: caption harvesting and rule-based interaction extraction;
//! - [`synth`]: few-shot prompt construction, generation filters, and the
//!   synthetic interaction-caption pair loop;
//! - [`distill`]: student-summarizer training examples and pseudo-label
//!   generation with format filters and test-set dedup;
//! - [`bench`]: benchmark construction (curated test set ingestion and the
//!   verb-support subset builder for situation-recognition data);
//! - [`captioner`]: weighted training-set construction and beam decoding;
//! - [`metrics`]: the evaluation suite (textual similarity, NLI groundedness,
//!   verb-embedding similarity, diversity) with top-k beam aggregation.
//!
//! All model inference sits behind the traits in [`backend`]; everything in
//! this crate is a pure function over immutable values and is safe to call
//! from parallel workers. The crate is `no_std` compatible (`alloc` required);
//! file IO, stub backends, and the CLI live in the companion `hhi-pipeline`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod backend;
pub mod bench;
pub mod captioner;
pub mod distill;
pub mod extract;
pub mod inflect;
pub mod metrics;
pub mod names;
pub mod parse;
pub mod synth;
pub mod types;

pub use names::NAME_TOKEN;
