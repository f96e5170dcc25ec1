//! Scoring candidates against a source embedding and dense ranking.
//!
//! Scores are compared after rounding to `score_precision` decimal places
//! (3 by default, the precision reports are printed at). Two candidates whose
//! rounded scores match share a rank; the next distinct score gets the next
//! integer, so `[0.876, 0.876, 0.873]` ranks as `[1, 1, 2]`. Raw scores are
//! kept in the report.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::similarity::{cosine, Embedding, SimilarityError};

pub const DEFAULT_SCORE_PRECISION: u32 = 3;

/// Rounding beyond this many decimals would overflow the integer key.
const MAX_SCORE_PRECISION: u32 = 15;

/// Placeholder an [`EntityFrame`] substitutes.
pub const ENTITY_SLOT: &str = "{ENTITY}";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error("nothing to rank")]
    Empty,
    #[error("score {index} is not finite")]
    NonFinite { index: usize },
    #[error("score precision {0} is above the supported maximum of {MAX_SCORE_PRECISION}")]
    Precision(u32),
    #[error("duplicate candidate label {0:?}")]
    DuplicateLabel(String),
    #[error("candidate {0:?} has empty text")]
    EmptyText(String),
    #[error("candidate {label:?}: {source}")]
    Similarity { label: String, source: SimilarityError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Supplied by the user, e.g. an existing engine's output.
    Reference,
    /// Produced by the model in this session.
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub text: String,
    pub origin: Origin,
}

impl Candidate {
    pub fn new(label: impl Into<String>, text: impl Into<String>, origin: Origin) -> Self {
        Self { label: label.into(), text: text.into(), origin }
    }

    pub fn reference(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(label, text, Origin::Reference)
    }

    pub fn generated(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self::new(label, text, Origin::Generated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    #[serde(flatten)]
    pub candidate: Candidate,
    pub score: f64,
    pub rank: usize,
}

/// Candidates scored against one source, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReport {
    /// Source segment text.
    pub source: String,
    pub entries: Vec<ScoredCandidate>,
    pub embed_model: String,
    pub score_precision: u32,
}

impl RankedReport {
    pub fn entry(&self, label: &str) -> Option<&ScoredCandidate> {
        self.entries.iter().find(|e| e.candidate.label == label)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.rank).collect()
    }
}

fn rounded_key(score: f64, precision: u32) -> i64 {
    // Scores are cosines in [-1, 1]; the product stays far inside i64.
    libm::round(score * libm::pow(10.0, f64::from(precision))) as i64
}

/// Dense ranks for `scores` at the default precision.
pub fn dense_rank(scores: &[f64]) -> Result<Vec<usize>, RankError> {
    dense_rank_with_precision(scores, DEFAULT_SCORE_PRECISION)
}

/// Dense ranks (1 = highest) after rounding every score to `precision`
/// decimal places. Output order matches input order.
pub fn dense_rank_with_precision(scores: &[f64], precision: u32) -> Result<Vec<usize>, RankError> {
    if scores.is_empty() {
        return Err(RankError::Empty);
    }
    if precision > MAX_SCORE_PRECISION {
        return Err(RankError::Precision(precision));
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(RankError::NonFinite { index });
    }
    let keys: Vec<i64> = scores.iter().map(|&s| rounded_key(s, precision)).collect();
    let distinct_desc: Vec<i64> = keys.iter().copied().collect::<BTreeSet<_>>().into_iter().rev().collect();
    Ok(keys
        .iter()
        .map(|k| {
            // Present by construction.
            distinct_desc.iter().position(|d| d == k).unwrap_or(0) + 1
        })
        .collect())
}

/// Scores each candidate against `source_vec` and dense-ranks the results.
pub fn rank_candidates(
    source: &str,
    source_vec: &Embedding,
    candidates: Vec<(Candidate, Embedding)>,
) -> Result<RankedReport, RankError> {
    rank_candidates_with_precision(source, source_vec, candidates, DEFAULT_SCORE_PRECISION)
}

pub fn rank_candidates_with_precision(
    source: &str,
    source_vec: &Embedding,
    candidates: Vec<(Candidate, Embedding)>,
    precision: u32,
) -> Result<RankedReport, RankError> {
    if candidates.is_empty() {
        return Err(RankError::Empty);
    }
    let mut seen = BTreeSet::new();
    let mut scored = Vec::with_capacity(candidates.len());
    for (candidate, vector) in candidates {
        if !seen.insert(candidate.label.clone()) {
            return Err(RankError::DuplicateLabel(candidate.label));
        }
        if candidate.text.trim().is_empty() {
            return Err(RankError::EmptyText(candidate.label));
        }
        if vector.model_id() != source_vec.model_id() {
            return Err(RankError::Similarity {
                label: candidate.label,
                source: SimilarityError::ModelMismatch {
                    left: source_vec.model_id().to_string(),
                    right: vector.model_id().to_string(),
                },
            });
        }
        let score = cosine(source_vec, &vector)
            .map_err(|source| RankError::Similarity { label: candidate.label.clone(), source })?;
        scored.push((candidate, score));
    }

    let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    let ranks = dense_rank_with_precision(&scores, precision)?;
    Ok(RankedReport {
        source: source.to_string(),
        entries: scored
            .into_iter()
            .zip(ranks)
            .map(|((candidate, score), rank)| ScoredCandidate { candidate, score, rank })
            .collect(),
        embed_model: source_vec.model_id().to_string(),
        score_precision: precision,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("frame must contain the {ENTITY_SLOT} slot")]
    MissingSlot,
    #[error("frame contains the {ENTITY_SLOT} slot more than once")]
    DuplicateSlot,
    #[error("no entities to substitute")]
    NoEntities,
    #[error("entity {0} is empty")]
    EmptyEntity(usize),
}

impl FrameError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MissingSlot => "substitution.frame.missing_slot",
            Self::DuplicateSlot => "substitution.frame.duplicate_slot",
            Self::NoEntities => "substitution.entities.empty",
            Self::EmptyEntity(_) => "substitution.entity.empty",
        }
    }
}

/// A fixed target sentence with one `{ENTITY}` slot, used to compare
/// substitutes for a culture-bound name while holding the wording constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityFrame {
    prefix: String,
    suffix: String,
}

impl EntityFrame {
    pub fn parse(frame: &str) -> Result<Self, FrameError> {
        match frame.matches(ENTITY_SLOT).count() {
            0 => Err(FrameError::MissingSlot),
            1 => {
                let (prefix, suffix) = frame.split_once(ENTITY_SLOT).ok_or(FrameError::MissingSlot)?;
                Ok(Self { prefix: prefix.to_string(), suffix: suffix.to_string() })
            }
            _ => Err(FrameError::DuplicateSlot),
        }
    }

    pub fn render(&self, entity: &str) -> String {
        let mut out = String::with_capacity(self.prefix.len() + entity.len() + self.suffix.len());
        out.push_str(&self.prefix);
        out.push_str(entity);
        out.push_str(&self.suffix);
        out
    }

    /// Renders every entity, checking the list first.
    pub fn render_all<S: AsRef<str>>(&self, entities: &[S]) -> Result<Vec<String>, FrameError> {
        if entities.is_empty() {
            return Err(FrameError::NoEntities);
        }
        entities
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let e = e.as_ref();
                if e.trim().is_empty() {
                    Err(FrameError::EmptyEntity(i))
                } else {
                    Ok(self.render(e))
                }
            })
            .collect()
    }
}
