//! Live rank-agreement check for the pot-idiom comparison set.
//!
//! Re-embeds the source and its six candidates with whatever embedding model
//! the gateway is configured for and compares the resulting ranks to the
//! published ones. Deviations are reported, never turned into errors: hosted
//! embedding snapshots drift.

use serde::Serialize;
use transpec_core::{dense_rank, Candidate, RankedReport};

use crate::pipeline::{Pipeline, PipelineError};

pub const POT_IDIOM_SOURCE: &str = "私たちは同じ釜の飯を食べた仲です。";

/// Label, text, published score, published rank.
pub const POT_IDIOM_ROWS: [(&str, &str, f64, usize); 6] = [
    ("DL", "We are friends who ate out of the same pot.", 0.772, 1),
    ("GT", "We ate rice from the same pot.", 0.727, 5),
    ("GPT", "We ate rice from the same pot.", 0.727, 5),
    ("v1", "We have shared the same pot of rice.", 0.743, 4),
    ("v2", "We have been through thick and thin together.", 0.759, 2),
    ("v3", "We’ve broken bread together.", 0.744, 3),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowDeviation {
    pub label: String,
    pub expected_score: f64,
    pub observed_score: f64,
    pub expected_rank: usize,
    pub observed_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankAgreement {
    pub embed_model: String,
    pub rows: Vec<RowDeviation>,
    pub ranks_agree: bool,
    pub max_abs_score_deviation: f64,
}

impl RankAgreement {
    pub fn compare(report: &RankedReport, expected: &[(&str, &str, f64, usize)]) -> Self {
        let rows: Vec<RowDeviation> = expected
            .iter()
            .filter_map(|(label, _, score, rank)| {
                report.entry(label).map(|e| RowDeviation {
                    label: (*label).to_owned(),
                    expected_score: *score,
                    observed_score: e.score,
                    expected_rank: *rank,
                    observed_rank: e.rank,
                })
            })
            .collect();
        let ranks_agree = rows.len() == expected.len() && rows.iter().all(|r| r.expected_rank == r.observed_rank);
        let max_abs_score_deviation =
            rows.iter().map(|r| (r.observed_score - r.expected_score).abs()).fold(0.0, f64::max);
        Self { embed_model: report.embed_model.clone(), rows, ranks_agree, max_abs_score_deviation }
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "embed model {}: ranks {} published order, max |score deviation| {:.3}\n",
            self.embed_model,
            if self.ranks_agree { "match" } else { "DEVIATE from" },
            self.max_abs_score_deviation
        );
        for r in &self.rows {
            out.push_str(&format!(
                "  {:<4} expected {:.3} (rank {}) observed {:.3} (rank {}){}\n",
                r.label,
                r.expected_score,
                r.expected_rank,
                r.observed_score,
                r.observed_rank,
                if r.expected_rank == r.observed_rank { "" } else { "  <- rank differs" }
            ));
        }
        out
    }
}

/// Published ranks recomputed from the published scores; used as a sanity
/// check that the expected table is self-consistent.
pub fn published_ranks() -> Vec<usize> {
    let scores: Vec<f64> = POT_IDIOM_ROWS.iter().map(|r| r.2).collect();
    dense_rank(&scores).unwrap_or_default()
}

pub async fn pot_idiom_agreement(pipeline: &Pipeline) -> Result<RankAgreement, PipelineError> {
    let candidates: Vec<Candidate> = POT_IDIOM_ROWS
        .iter()
        .map(|(label, text, _, _)| {
            if label.starts_with('v') {
                Candidate::generated(*label, *text)
            } else {
                Candidate::reference(*label, *text)
            }
        })
        .collect();
    let report = pipeline.score(POT_IDIOM_SOURCE, &candidates).await?;
    let agreement = RankAgreement::compare(&report, &POT_IDIOM_ROWS);
    if agreement.ranks_agree {
        tracing::info!(model = %agreement.embed_model, "live ranks agree with the published order");
    } else {
        tracing::warn!(model = %agreement.embed_model, "live ranks deviate from the published order");
    }
    Ok(agreement)
}
