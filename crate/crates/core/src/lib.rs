//! Core model for specification-conditioned machine translation.
//!
//! This crate carries everything that does not touch the network or the
//! filesystem: the translation-specification model, byte-exact prompt
//! rendering, multi-candidate response parsing, cosine similarity and dense
//! ranking of candidates. It is `no_std` and only needs `alloc`.
//!
//! IO, provider access, persistence and the command line live in the
//! `transpec` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod candidates;
pub mod lang;
pub mod prompt;
pub mod rank;
pub mod report;
pub mod similarity;
pub mod spec;

pub use candidates::{parse_candidates, CandidateParseError};
pub use lang::{language_name, LanguagePair, LanguageTag, TagError};
pub use prompt::{
    build_baseline, build_dynamic_equivalence, build_prompt, build_spec_conditioned, spell_count, PromptBundle,
    PromptError, TemplateId, MAX_CANDIDATES,
};
pub use rank::{
    dense_rank, dense_rank_with_precision, rank_candidates, rank_candidates_with_precision, Candidate, EntityFrame,
    FrameError, Origin, RankError, RankedReport, ScoredCandidate, DEFAULT_SCORE_PRECISION, ENTITY_SLOT,
};
pub use report::{render, render_json, render_table, ReportFormat};
pub use similarity::{cosine, Embedding, SimilarityError};
pub use spec::{
    default_target_culture, parse_spec, parse_spec_value, serialize_spec, validate_spec, ExemplarPair, PromptStrategy,
    SourceSegment, SpecError, StrategyKind, TranslationSpec, Violation,
};
