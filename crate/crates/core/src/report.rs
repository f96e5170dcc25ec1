//! Text renderings of a [`RankedReport`].

use alloc::format;
use alloc::string::String;
use core::fmt::Write;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rank::RankedReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format {other:?} (expected table or json)")),
        }
    }
}

/// Pipe-separated table: a `[source text]` line, the header
/// `Type | Target sentence | C.S. | Rank`, then one row per entry in report
/// order with the score printed at the report's precision. Ends with LF.
pub fn render_table(report: &RankedReport) -> String {
    let precision = report.score_precision as usize;
    let mut out = String::new();
    let _ = writeln!(out, "[source text] {}", report.source);
    out.push_str("Type | Target sentence | C.S. | Rank\n");
    for entry in &report.entries {
        let _ = writeln!(
            out,
            "{} | {} | {:.*} | {}",
            entry.candidate.label,
            entry.candidate.text.replace('\n', " "),
            precision,
            entry.score,
            entry.rank
        );
    }
    out
}

/// Pretty JSON followed by LF.
pub fn render_json(report: &RankedReport) -> String {
    let mut out = serde_json::to_string_pretty(report).unwrap_or_default();
    out.push('\n');
    out
}

pub fn render(report: &RankedReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(report),
        ReportFormat::Json => render_json(report),
    }
}
