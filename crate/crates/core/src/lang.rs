//! Language tags and the language pair of a translation job.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Display names used when a language has to be spelled out inside a prompt.
///
/// Only the primary subtag is looked up, so `en-US` and `en-GB` both read as
/// "English".
const LANGUAGE_NAMES: &[(&str, &str)] = &[
    ("ar", "Arabic"),
    ("cs", "Czech"),
    ("da", "Danish"),
    ("de", "German"),
    ("el", "Greek"),
    ("en", "English"),
    ("es", "Spanish"),
    ("fi", "Finnish"),
    ("fr", "French"),
    ("he", "Hebrew"),
    ("hi", "Hindi"),
    ("hu", "Hungarian"),
    ("id", "Indonesian"),
    ("is", "Icelandic"),
    ("it", "Italian"),
    ("ja", "Japanese"),
    ("ko", "Korean"),
    ("nl", "Dutch"),
    ("no", "Norwegian"),
    ("pl", "Polish"),
    ("pt", "Portuguese"),
    ("ro", "Romanian"),
    ("ru", "Russian"),
    ("sv", "Swedish"),
    ("th", "Thai"),
    ("tr", "Turkish"),
    ("uk", "Ukrainian"),
    ("vi", "Vietnamese"),
    ("zh", "Chinese"),
];

/// Looks up the English display name for a tag's primary subtag.
pub fn language_name(tag: &LanguageTag) -> Option<&'static str> {
    let primary = tag.primary();
    LANGUAGE_NAMES.iter().find(|(code, _)| *code == primary).map(|(_, name)| *name)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TagError {
    #[error("language tag is empty")]
    Empty,
    #[error("invalid language tag {0:?}: expected a 2-3 letter lowercase code with an optional -XX region")]
    Malformed(String),
}

/// A language tag of the form `ll`, `lll`, `ll-RR` or `lll-RR`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageTag(String);

impl LanguageTag {
    pub fn new(tag: &str) -> Result<Self, TagError> {
        if tag.is_empty() {
            return Err(TagError::Empty);
        }
        let (primary, region) = match tag.split_once('-') {
            Some((p, r)) => (p, Some(r)),
            None => (tag, None),
        };
        let primary_ok = (2..=3).contains(&primary.len()) && primary.bytes().all(|b| b.is_ascii_lowercase());
        let region_ok = region.map(|r| r.len() == 2 && r.bytes().all(|b| b.is_ascii_uppercase())).unwrap_or(true);
        if primary_ok && region_ok {
            Ok(Self(tag.to_string()))
        } else {
            Err(TagError::Malformed(tag.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The language subtag without any region.
    pub fn primary(&self) -> &str {
        self.0.split('-').next().unwrap_or(&self.0)
    }

    pub fn region(&self) -> Option<&str> {
        self.0.split_once('-').map(|(_, r)| r)
    }
}

impl FromStr for LanguageTag {
    type Err = TagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl TryFrom<String> for LanguageTag {
    type Error = TagError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<LanguageTag> for String {
    fn from(tag: LanguageTag) -> Self {
        tag.0
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Source and target language of a job. The two tags always differ.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LanguagePair {
    source: LanguageTag,
    target: LanguageTag,
}

impl LanguagePair {
    /// Returns `None` when source and target are the same tag.
    pub fn new(source: LanguageTag, target: LanguageTag) -> Option<Self> {
        (source != target).then_some(Self { source, target })
    }

    pub fn source(&self) -> &LanguageTag {
        &self.source
    }

    pub fn target(&self) -> &LanguageTag {
        &self.target
    }
}
