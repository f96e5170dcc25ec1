//! Embedding vectors and cosine similarity.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimilarityError {
    #[error("embedding has no components")]
    Empty,
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("embedding model mismatch: {left:?} vs {right:?}")]
    ModelMismatch { left: String, right: String },
}

/// A text embedding. The dimension is the length of `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEmbedding")]
pub struct Embedding {
    values: Vec<f64>,
    model_id: String,
}

#[derive(Deserialize)]
struct RawEmbedding {
    values: Vec<f64>,
    model_id: String,
}

impl TryFrom<RawEmbedding> for Embedding {
    type Error = SimilarityError;

    fn try_from(raw: RawEmbedding) -> Result<Self, Self::Error> {
        Self::new(raw.values, raw.model_id)
    }
}

impl Embedding {
    pub fn new(values: Vec<f64>, model_id: impl Into<String>) -> Result<Self, SimilarityError> {
        if values.is_empty() {
            return Err(SimilarityError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SimilarityError::NonFinite { index });
        }
        Ok(Self { values, model_id: model_id.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Cosine of the angle between two embeddings, clamped to `[-1, 1]`.
///
/// Every term is symmetric in its arguments (products commute, the two norms
/// are multiplied), so `cosine(a, b)` and `cosine(b, a)` are bit-identical.
/// Model ids are not compared here; see [`crate::rank_candidates`].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, SimilarityError> {
    cosine_slices(a.values(), b.values())
}

pub(crate) fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let mut dot = CompensatedSum::default();
    let mut norm_a = CompensatedSum::default();
    let mut norm_b = CompensatedSum::default();
    for (&x, &y) in a.iter().zip(b) {
        dot.add(x * y);
        norm_a.add(x * x);
        norm_b.add(y * y);
    }
    let (norm_a, norm_b) = (norm_a.value(), norm_b.value());
    if norm_a <= 0.0 || norm_b <= 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    let denom = libm::sqrt(norm_a) * libm::sqrt(norm_b);
    Ok((dot.value() / denom).clamp(-1.0, 1.0))
}
