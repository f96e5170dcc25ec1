//! Splitting a multi-candidate model response into individual translations.
//!
//! A response to "Please generate three translations" usually looks like
//!
//! ```text
//! Here are three options:
//! 1. We have shared the same pot of rice.
//! 2. "We have been through thick and thin together."
//! 3) We've broken bread together.
//! ```
//!
//! Enumerators (`1.`, `1)`, `v1:`; case-insensitive `v`) are recognised only
//! at the start of a line, only when followed by whitespace or end of line,
//! and only in sequence: while looking for candidate `k`, a line starting
//! with any other number is a continuation of candidate `k - 1`. Text before
//! the first enumerator is ignored.

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CandidateParseError {
    #[error("expected candidate count must be at least 1")]
    ZeroExpected,
    #[error("expected {expected} candidates, found {found} in response: {raw:?}")]
    CountMismatch { expected: usize, found: usize, raw: String },
    #[error("candidate {index} is empty after stripping")]
    EmptyCandidate { index: usize },
}

const QUOTE_PAIRS: [(char, char); 6] = [
    ('"', '"'),
    ('\'', '\''),
    ('\u{201c}', '\u{201d}'),
    ('\u{2018}', '\u{2019}'),
    ('\u{300c}', '\u{300d}'),
    ('\u{300e}', '\u{300f}'),
];

/// Returns exactly `expected_n` non-empty candidate texts in response order.
pub fn parse_candidates(raw: &str, expected_n: usize) -> Result<Vec<String>, CandidateParseError> {
    match expected_n {
        0 => Err(CandidateParseError::ZeroExpected),
        1 => {
            let text = strip(raw);
            if text.is_empty() {
                Err(CandidateParseError::EmptyCandidate { index: 1 })
            } else {
                Ok(alloc::vec![text.into()])
            }
        }
        _ => parse_enumerated(raw, expected_n),
    }
}

fn parse_enumerated(raw: &str, expected_n: usize) -> Result<Vec<String>, CandidateParseError> {
    let mut found: Vec<String> = Vec::with_capacity(expected_n);
    let mut current: Option<String> = None;

    for line in raw.lines() {
        let next = found.len() + usize::from(current.is_some()) + 1;
        if let Some(rest) = strip_enumerator(line, next) {
            if let Some(done) = current.take() {
                found.push(done);
            }
            current = Some(rest.into());
        } else if let Some(buf) = current.as_mut() {
            buf.push('\n');
            buf.push_str(line);
        }
    }
    found.extend(current);

    if found.len() != expected_n {
        return Err(CandidateParseError::CountMismatch { expected: expected_n, found: found.len(), raw: raw.into() });
    }

    found
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let text = strip(c);
            if text.is_empty() {
                Err(CandidateParseError::EmptyCandidate { index: i + 1 })
            } else {
                Ok(text.into())
            }
        })
        .collect()
}

/// If `line` starts with enumerator number `expected`, returns the rest.
fn strip_enumerator(line: &str, expected: usize) -> Option<&str> {
    let body = line.trim_start();
    let (has_v, digits_start) = match body.as_bytes().first() {
        Some(b'v' | b'V') => (true, &body[1..]),
        _ => (false, body),
    };
    let digit_len = digits_start.bytes().take_while(u8::is_ascii_digit).count();
    if digit_len == 0 {
        return None;
    }
    let number: usize = digits_start[..digit_len].parse().ok()?;
    if number != expected {
        return None;
    }
    let after = &digits_start[digit_len..];
    let mut chars = after.chars();
    let punct = chars.next()?;
    let allowed = match has_v {
        true => matches!(punct, ':' | '.' | ')'),
        false => matches!(punct, '.' | ')'),
    };
    if !allowed {
        return None;
    }
    let rest = chars.as_str();
    match rest.chars().next() {
        None => Some(rest),
        Some(c) if c.is_whitespace() => Some(rest),
        Some(_) => None,
    }
}

/// Trims whitespace and one layer of matching surrounding quotes.
fn strip(text: &str) -> &str {
    let trimmed = text.trim();
    for (open, close) in QUOTE_PAIRS {
        if let Some(inner) = trimmed.strip_prefix(open).and_then(|t| t.strip_suffix(close)) {
            return inner.trim();
        }
    }
    trimmed
}
