//! Byte-exact prompt rendering.
//!
//! Every template is a fixed line layout (LF separated, no trailing newline)
//! identified by a [`TemplateId`]. Changing a layout means bumping its id and
//! adding new golden files; existing ids never change output.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{language_name, LanguagePair, LanguageTag};
use crate::spec::{validate_spec, ExemplarPair, PromptStrategy, SourceSegment, TranslationSpec, Violation};

/// Largest candidate count a prompt may ask for.
pub const MAX_CANDIDATES: usize = 10;

const SPELLED: [&str; MAX_CANDIDATES] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

const DYNAMIC_EQUIVALENCE_DEFINITION: &str = "Dynamic equivalence is a strategy for translating from the perspective of equalizing the reader\u{2019}s response to the [source text] and the [target text].";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("no display name known for language tag {0:?}")]
    UnknownLanguage(LanguageTag),
    #[error("candidate count must be between 1 and {MAX_CANDIDATES}, got {0}")]
    CandidateCount(usize),
    #[error("the baseline prompt produces a single translation; got n = {0}")]
    BaselineCount(usize),
    #[error("dynamic equivalence needs at least one exemplar")]
    NoExemplars,
    #[error("spec is not valid for this strategy: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl PromptError {
    pub fn code(&self) -> String {
        match self {
            Self::UnknownLanguage(_) => "prompt.unknown_language".into(),
            Self::CandidateCount(_) | Self::BaselineCount(_) => "prompt.candidate_count".into(),
            Self::NoExemplars => "strategy.exemplars.required".into(),
            Self::Invalid(v) => v.first().map(|v| v.code.clone()).unwrap_or_else(|| "spec.invalid".into()),
        }
    }
}

/// Template versions. The string form is stored with every rendered prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    #[serde(rename = "baseline.v1")]
    BaselineV1,
    #[serde(rename = "spec_conditioned.v1")]
    SpecConditionedV1,
    #[serde(rename = "dynamic_equivalence.v1")]
    DynamicEquivalenceV1,
}

impl TemplateId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BaselineV1 => "baseline.v1",
            Self::SpecConditionedV1 => "spec_conditioned.v1",
            Self::DynamicEquivalenceV1 => "dynamic_equivalence.v1",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rendered prompt and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub strategy: PromptStrategy,
    pub text: String,
    pub template_id: TemplateId,
    pub n_candidates: usize,
}

/// English word for a candidate count, `1..=10`.
pub fn spell_count(n: usize) -> Option<&'static str> {
    n.checked_sub(1).and_then(|i| SPELLED.get(i)).copied()
}

fn name_of(tag: &LanguageTag) -> Result<&'static str, PromptError> {
    language_name(tag).ok_or_else(|| PromptError::UnknownLanguage(tag.clone()))
}

fn directive(n: usize) -> Result<Option<String>, PromptError> {
    match n {
        1 => Ok(None),
        _ => spell_count(n)
            .map(|word| Some(format!("Please generate {word} translations.")))
            .ok_or(PromptError::CandidateCount(n)),
    }
}

/// `Translate to {target}.` followed by the segment on the next line.
pub fn build_baseline(segment: &SourceSegment, pair: &LanguagePair) -> Result<PromptBundle, PromptError> {
    let target = name_of(pair.target())?;
    Ok(PromptBundle {
        strategy: PromptStrategy::Baseline,
        text: format!("Translate to {target}.\n{}", segment.text),
        template_id: TemplateId::BaselineV1,
        n_candidates: 1,
    })
}

/// Purpose and audience lines, then the optional locale, register and style
/// guide lines, then the multi-candidate directive when `n > 1`, then the
/// segment.
pub fn build_spec_conditioned(
    segment: &SourceSegment,
    spec: &TranslationSpec,
    n: usize,
) -> Result<PromptBundle, PromptError> {
    validate_spec(spec, &PromptStrategy::SpecConditioned).map_err(PromptError::Invalid)?;
    let source = name_of(spec.pair.source())?;
    let target = name_of(spec.pair.target())?;
    let directive = directive(n)?;

    let mut lines: Vec<String> = Vec::with_capacity(8);
    lines.push(format!(
        "Translate the following {source} [source text] into {target}. Please fulfill the following conditions when translating."
    ));
    lines.push(format!("Purpose of the translation: {}", spec.purpose));
    lines.push(format!("Target audience: {}", spec.target_audience));
    if let Some(locale) = &spec.target_locale {
        lines.push(format!("Target locale: {locale}"));
    }
    if let Some(register) = &spec.register {
        lines.push(format!("Register: {register}"));
    }
    if let Some(guide) = &spec.style_guide {
        lines.push(format!("Style guide: {guide}"));
    }
    lines.extend(directive);
    lines.push(format!("[source text] {}", segment.text));

    Ok(PromptBundle {
        strategy: PromptStrategy::SpecConditioned,
        text: lines.join("\n"),
        template_id: TemplateId::SpecConditionedV1,
        n_candidates: n,
    })
}

/// Definition paragraph with exemplar rationales, the exemplar blocks, the
/// substitution instruction, the optional directive and the segment, each
/// separated by a blank line.
pub fn build_dynamic_equivalence(
    segment: &SourceSegment,
    exemplars: &[ExemplarPair],
    target_culture: &str,
    pair: &LanguagePair,
    n: usize,
) -> Result<PromptBundle, PromptError> {
    if exemplars.is_empty() {
        return Err(PromptError::NoExemplars);
    }
    let strategy =
        PromptStrategy::DynamicEquivalence { exemplars: exemplars.to_vec(), target_culture: target_culture.into() };
    let spec = TranslationSpec::for_pair(pair.clone());
    validate_spec(&spec, &strategy).map_err(PromptError::Invalid)?;
    let target = name_of(pair.target())?;
    let directive = directive(n)?;

    let mut definition = String::from(DYNAMIC_EQUIVALENCE_DEFINITION);
    for rationale in exemplars.iter().map(|e| e.rationale.trim()).filter(|r| !r.is_empty()) {
        definition.push(' ');
        definition.push_str(rationale);
    }

    let mut blocks: Vec<String> = Vec::with_capacity(exemplars.len() + 4);
    blocks.push(definition);
    blocks.extend(
        exemplars.iter().map(|e| format!("[source text] {}\n[target text] {}", e.source_phrase, e.target_phrase)),
    );
    let example_ref = if exemplars.len() == 1 { "example" } else { "examples" };
    blocks.push(format!(
        "Following this concept and {example_ref}, please translate the following [source text] into {target} using the dynamic equivalent. Please replace the translation with something that would be understood in {target_culture}."
    ));
    blocks.extend(directive);
    blocks.push(format!("[source text] {}", segment.text));

    Ok(PromptBundle {
        strategy,
        text: blocks.join("\n\n"),
        template_id: TemplateId::DynamicEquivalenceV1,
        n_candidates: n,
    })
}

/// Dispatches on the strategy. Baseline only supports `n == 1`.
pub fn build_prompt(
    segment: &SourceSegment,
    spec: &TranslationSpec,
    strategy: &PromptStrategy,
    n: usize,
) -> Result<PromptBundle, PromptError> {
    match strategy {
        PromptStrategy::Baseline if n == 1 => build_baseline(segment, &spec.pair),
        PromptStrategy::Baseline => Err(PromptError::BaselineCount(n)),
        PromptStrategy::SpecConditioned => build_spec_conditioned(segment, spec, n),
        PromptStrategy::DynamicEquivalence { exemplars, target_culture } => {
            build_dynamic_equivalence(segment, exemplars, target_culture, &spec.pair, n)
        }
    }
}
