//! Dataset construction and evaluation for context-assisted image captioning
//! and contextual visual entailment.
//!
//! The pipeline runs ingest → clean → split → tag → generate entailment
//! instances → render instruction prompts, and scores model output with
//! [`metrics::evaluate`].

pub mod annotation;
pub mod corpus;
pub mod entity;
pub mod error;
pub mod instruct;
pub mod jsonl;
pub mod metrics;
pub mod negative;
pub mod seed;
pub mod text;

pub use corpus::{build_keyword_dataset, clean, ingest, split, Article, CaptionRecord, Corpus, ImageRef, Split};
pub use entity::{Entity, EntitySignature, EntityTagger, EntityType, Gazetteer, TaggedCaption};
pub use error::{Error, Result};
pub use instruct::{InstructionRecord, Renderer, TemplateMode, TokenBudget, Tokenizer};
pub use negative::{assemble, EntailmentInstance, Label, MixConfig, NegClass};

/// Version of the line-delimited file formats written by this crate.
pub const FORMAT_VERSION: u32 = 1;
