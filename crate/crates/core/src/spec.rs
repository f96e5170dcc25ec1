//! Translation specifications, source segments and prompt strategies.
//!
//! A [`TranslationSpec`] holds the requirements fixed before translation
//! starts: purpose, audience and the optional locale, register and style
//! guide. Specs are exchanged as a flat JSON object:
//!
//! ```json
//! {"source_lang": "ja", "target_lang": "en",
//!  "purpose": "...", "target_audience": "...",
//!  "target_locale": "en-US", "register": "...", "style_guide": "..."}
//! ```
//!
//! The last three keys are optional. Unknown keys are rejected.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::lang::{language_name, LanguagePair, LanguageTag, TagError};

const KEY_SOURCE_LANG: &str = "source_lang";
const KEY_TARGET_LANG: &str = "target_lang";
const KEY_PURPOSE: &str = "purpose";
const KEY_AUDIENCE: &str = "target_audience";
const KEY_LOCALE: &str = "target_locale";
const KEY_REGISTER: &str = "register";
const KEY_STYLE_GUIDE: &str = "style_guide";

const REQUIRED_KEYS: [&str; 4] = [KEY_SOURCE_LANG, KEY_TARGET_LANG, KEY_PURPOSE, KEY_AUDIENCE];
const OPTIONAL_KEYS: [&str; 3] = [KEY_LOCALE, KEY_REGISTER, KEY_STYLE_GUIDE];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("malformed spec document: {0}")]
    Malformed(String),
    #[error("spec document must be a JSON object")]
    NotAnObject,
    #[error("unknown key {0:?} in spec document")]
    UnknownKey(String),
    #[error("missing required key {0:?}")]
    MissingKey(&'static str),
    #[error("key {0:?} must be a string")]
    NotAString(&'static str),
    #[error("key {0:?} must not be empty")]
    EmptyValue(&'static str),
    #[error("key {key:?}: {source}")]
    InvalidTag { key: &'static str, source: TagError },
    #[error("source_lang and target_lang are both {0:?}")]
    SameLanguage(String),
    #[error("segment text must not be empty")]
    EmptySegment,
    #[error("exemplar {index}: {field} must not be empty")]
    EmptyExemplar { index: usize, field: &'static str },
    #[error("spec is not valid for the {strategy} strategy: {}", join_messages(.violations))]
    Invalid { strategy: StrategyKind, violations: Vec<Violation> },
}

impl SpecError {
    /// Machine-readable code, e.g. `spec.purpose.empty`.
    pub fn code(&self) -> String {
        match self {
            Self::Malformed(_) => "spec.malformed".to_owned(),
            Self::NotAnObject => "spec.not_object".to_owned(),
            Self::UnknownKey(_) => "spec.unknown_key".to_owned(),
            Self::MissingKey(k) => format!("spec.{k}.missing"),
            Self::NotAString(k) => format!("spec.{k}.not_string"),
            Self::EmptyValue(k) => format!("spec.{k}.empty"),
            Self::InvalidTag { key, .. } => format!("spec.{key}.invalid"),
            Self::SameLanguage(_) => "spec.pair.same_language".to_owned(),
            Self::EmptySegment => "segment.text.empty".to_owned(),
            Self::EmptyExemplar { .. } => "strategy.exemplar.empty".to_owned(),
            Self::Invalid { violations, .. } => {
                violations.first().map(|v| v.code.clone()).unwrap_or_else(|| "spec.invalid".to_owned())
            }
        }
    }
}

fn join_messages(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; ")
}

/// One reason a spec cannot be used with a strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub code: String,
    pub message: String,
}

impl Violation {
    fn required(field: &str) -> Self {
        Self { field: field.to_owned(), code: format!("spec.{field}.required"), message: format!("{field} required") }
    }

    fn empty(field: &str) -> Self {
        Self {
            field: field.to_owned(),
            code: format!("spec.{field}.empty"),
            message: format!("{field} must not be empty when present"),
        }
    }
}

/// The pre-production requirements of a translation job.
///
/// `purpose` and `target_audience` may be empty on a spec built in code for
/// baseline runs; the document parser never produces such a spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationSpec {
    pub pair: LanguagePair,
    pub purpose: String,
    pub target_audience: String,
    pub target_locale: Option<LanguageTag>,
    pub register: Option<String>,
    pub style_guide: Option<String>,
}

impl TranslationSpec {
    pub fn new(pair: LanguagePair, purpose: &str, target_audience: &str) -> Self {
        Self {
            pair,
            purpose: purpose.to_owned(),
            target_audience: target_audience.to_owned(),
            target_locale: None,
            register: None,
            style_guide: None,
        }
    }

    /// A spec carrying only the language pair, enough for baseline prompts.
    pub fn for_pair(pair: LanguagePair) -> Self {
        Self::new(pair, "", "")
    }
}

/// Wire form of [`TranslationSpec`]; field names are the file contract.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    source_lang: LanguageTag,
    target_lang: LanguageTag,
    purpose: String,
    target_audience: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_locale: Option<LanguageTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    register: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    style_guide: Option<String>,
}

impl Serialize for TranslationSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SpecDocument {
            source_lang: self.pair.source().clone(),
            target_lang: self.pair.target().clone(),
            purpose: self.purpose.clone(),
            target_audience: self.target_audience.clone(),
            target_locale: self.target_locale.clone(),
            register: self.register.clone(),
            style_guide: self.style_guide.clone(),
        }
        .serialize(serializer)
    }
}

/// Structural deserialization used for persisted records. It checks the tags
/// and the pair but, unlike [`parse_spec`], accepts an empty purpose or
/// audience so that baseline sessions round-trip.
impl<'de> Deserialize<'de> for TranslationSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = SpecDocument::deserialize(deserializer)?;
        let same = doc.source_lang.as_str().to_owned();
        let pair = LanguagePair::new(doc.source_lang, doc.target_lang)
            .ok_or_else(|| serde::de::Error::custom(SpecError::SameLanguage(same)))?;
        Ok(Self {
            pair,
            purpose: doc.purpose,
            target_audience: doc.target_audience,
            target_locale: doc.target_locale,
            register: doc.register,
            style_guide: doc.style_guide,
        })
    }
}

/// Parses and validates a spec document (UTF-8 JSON text).
pub fn parse_spec(document: &str) -> Result<TranslationSpec, SpecError> {
    let value: Value = serde_json::from_str(document).map_err(|e| SpecError::Malformed(format!("{e}")))?;
    parse_spec_value(&value)
}

/// Like [`parse_spec`] but starting from an already-decoded JSON value.
pub fn parse_spec_value(value: &Value) -> Result<TranslationSpec, SpecError> {
    let map = value.as_object().ok_or(SpecError::NotAnObject)?;
    if let Some(unknown) =
        map.keys().find(|k| !REQUIRED_KEYS.contains(&k.as_str()) && !OPTIONAL_KEYS.contains(&k.as_str()))
    {
        return Err(SpecError::UnknownKey(unknown.clone()));
    }

    let source = tag_field(map, KEY_SOURCE_LANG)?;
    let target = tag_field(map, KEY_TARGET_LANG)?;
    let purpose = required_text(map, KEY_PURPOSE)?;
    let target_audience = required_text(map, KEY_AUDIENCE)?;
    let target_locale = match optional_text(map, KEY_LOCALE)? {
        Some(raw) => Some(LanguageTag::new(raw).map_err(|source| SpecError::InvalidTag { key: KEY_LOCALE, source })?),
        None => None,
    };
    let register = optional_text(map, KEY_REGISTER)?.map(str::to_owned);
    let style_guide = optional_text(map, KEY_STYLE_GUIDE)?.map(str::to_owned);

    let same = source.as_str().to_owned();
    let pair = LanguagePair::new(source, target).ok_or(SpecError::SameLanguage(same))?;
    Ok(TranslationSpec {
        pair,
        purpose: purpose.to_owned(),
        target_audience: target_audience.to_owned(),
        target_locale,
        register,
        style_guide,
    })
}

fn string_field<'a>(map: &'a Map<String, Value>, key: &'static str) -> Result<Option<&'a str>, SpecError> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.as_str())),
        Some(_) => Err(SpecError::NotAString(key)),
    }
}

fn required_text<'a>(map: &'a Map<String, Value>, key: &'static str) -> Result<&'a str, SpecError> {
    let value = string_field(map, key)?.ok_or(SpecError::MissingKey(key))?;
    if value.trim().is_empty() {
        return Err(SpecError::EmptyValue(key));
    }
    Ok(value)
}

fn optional_text<'a>(map: &'a Map<String, Value>, key: &'static str) -> Result<Option<&'a str>, SpecError> {
    match string_field(map, key)? {
        Some(v) if v.trim().is_empty() => Err(SpecError::EmptyValue(key)),
        other => Ok(other),
    }
}

fn tag_field(map: &Map<String, Value>, key: &'static str) -> Result<LanguageTag, SpecError> {
    let raw = string_field(map, key)?.ok_or(SpecError::MissingKey(key))?;
    if raw.is_empty() {
        return Err(SpecError::EmptyValue(key));
    }
    LanguageTag::new(raw).map_err(|source| SpecError::InvalidTag { key, source })
}

/// Renders a spec as a pretty-printed document accepted by [`parse_spec`].
pub fn serialize_spec(spec: &TranslationSpec) -> String {
    // Serializing plain strings into a Value cannot fail.
    serde_json::to_string_pretty(spec).unwrap_or_default()
}

/// Checks a spec against what a strategy needs. Returns every violation.
pub fn validate_spec(spec: &TranslationSpec, strategy: &PromptStrategy) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    for (field, value) in [(KEY_REGISTER, spec.register.as_deref()), (KEY_STYLE_GUIDE, spec.style_guide.as_deref())] {
        if value.is_some_and(|v| v.trim().is_empty()) {
            violations.push(Violation::empty(field));
        }
    }

    match strategy {
        PromptStrategy::Baseline => {}
        PromptStrategy::SpecConditioned => {
            if spec.purpose.trim().is_empty() {
                violations.push(Violation::required(KEY_PURPOSE));
            }
            if spec.target_audience.trim().is_empty() {
                violations.push(Violation::required(KEY_AUDIENCE));
            }
        }
        PromptStrategy::DynamicEquivalence { exemplars, target_culture } => {
            if exemplars.is_empty() {
                violations.push(Violation {
                    field: "exemplars".to_owned(),
                    code: "strategy.exemplars.required".to_owned(),
                    message: "at least one exemplar required".to_owned(),
                });
            }
            for (i, ex) in exemplars.iter().enumerate() {
                if let Err(e) = ex.check(i) {
                    violations.push(Violation {
                        field: "exemplars".to_owned(),
                        code: e.code(),
                        message: format!("{e}"),
                    });
                }
            }
            if target_culture.trim().is_empty() {
                violations.push(Violation {
                    field: "target_culture".to_owned(),
                    code: "strategy.target_culture.required".to_owned(),
                    message: "target_culture required".to_owned(),
                });
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// A segment of source text to translate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSegment {
    pub id: String,
    pub text: String,
}

impl SourceSegment {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, SpecError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(SpecError::EmptySegment);
        }
        Ok(Self { id: id.into(), text })
    }
}

/// A worked example shown to the model in a dynamic-equivalence prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarPair {
    pub source_phrase: String,
    pub target_phrase: String,
    #[serde(default)]
    pub rationale: String,
}

impl ExemplarPair {
    pub fn new(source_phrase: &str, target_phrase: &str, rationale: &str) -> Result<Self, SpecError> {
        let pair = Self {
            source_phrase: source_phrase.to_owned(),
            target_phrase: target_phrase.to_owned(),
            rationale: rationale.to_owned(),
        };
        pair.check(0)?;
        Ok(pair)
    }

    fn check(&self, index: usize) -> Result<(), SpecError> {
        if self.source_phrase.trim().is_empty() {
            return Err(SpecError::EmptyExemplar { index, field: "source_phrase" });
        }
        if self.target_phrase.trim().is_empty() {
            return Err(SpecError::EmptyExemplar { index, field: "target_phrase" });
        }
        Ok(())
    }

    /// The bundled exemplar: "Lamb of God" rendered as "Seal of God" for a
    /// readership without sheep.
    pub fn lamb_of_god() -> Self {
        Self {
            source_phrase: "Lamb of God".to_owned(),
            target_phrase: "Seal of God".to_owned(),
            rationale: LAMB_RATIONALE.to_owned(),
        }
    }
}

const LAMB_RATIONALE: &str = "In the example below, the word \u{201c}Lamb\u{201d} in the original text would be translated as \u{201c}lamb\u{201d} in the literal translation. However, when translating for Iceland, which has no sheep, it is difficult to convey the nuance of the word \u{201c}lamb\u{201d}. From the standpoint of equalizing the reader\u{2019}s reaction, this is a ruse to translate it as \u{201c}seal\u{201d}. It is believed that \u{201c}lamb\u{201d} in the [source text] and \u{201c}seal\u{201d} in the [target text] will evoke the same reaction in the reader.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Baseline,
    SpecConditioned,
    DynamicEquivalence,
}

impl core::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::Baseline => "baseline",
            Self::SpecConditioned => "spec_conditioned",
            Self::DynamicEquivalence => "dynamic_equivalence",
        })
    }
}

/// How the translation prompt is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PromptStrategy {
    /// Plain "Translate to {language}." instruction.
    Baseline,
    /// Purpose, audience and optional spec lines ahead of the source text.
    SpecConditioned,
    /// Explains dynamic equivalence with worked exemplars and asks for a
    /// culturally substituted rendering.
    DynamicEquivalence { exemplars: Vec<ExemplarPair>, target_culture: String },
}

impl PromptStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Self::Baseline => StrategyKind::Baseline,
            Self::SpecConditioned => StrategyKind::SpecConditioned,
            Self::DynamicEquivalence { .. } => StrategyKind::DynamicEquivalence,
        }
    }

    /// Dynamic equivalence with the bundled exemplar, aimed at speakers of
    /// the pair's target language.
    pub fn default_dynamic_equivalence(pair: &LanguagePair) -> Self {
        Self::DynamicEquivalence {
            exemplars: alloc::vec![ExemplarPair::lamb_of_god()],
            target_culture: default_target_culture(pair),
        }
    }
}

/// "an English-speaking culture", "a French-speaking culture", ...
pub fn default_target_culture(pair: &LanguagePair) -> String {
    let name = language_name(pair.target()).unwrap_or(pair.target().as_str());
    let article = match name.chars().next() {
        Some(c) if "AEIOUaeiou".contains(c) => "an",
        _ => "a",
    };
    format!("{article} {name}-speaking culture")
}
