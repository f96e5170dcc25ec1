//! Property checks shared by the `properties` test target and the
//! acceptance runner. Each `check_*` takes one generated case.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use transpec_core::{
    build_prompt, cosine, dense_rank, parse_candidates, parse_spec, rank_candidates, serialize_spec, validate_spec,
    Candidate, Embedding, LanguagePair, LanguageTag, PromptStrategy, SourceSegment, TranslationSpec,
};

const TAGS: [&str; 8] = ["ja", "en", "fr", "de", "en-US", "pt-BR", "zh", "ko"];
const WORDS: [&str; 9] = ["", "two", "three", "four", "five", "six", "seven", "eight", "nine"];

pub fn text() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9 ,.'!?-]{0,30}[A-Za-z0-9.!?]"
}

pub fn pair() -> impl Strategy<Value = LanguagePair> {
    (0..TAGS.len(), 0..TAGS.len()).prop_filter("distinct", |(a, b)| a != b).prop_map(|(a, b)| {
        LanguagePair::new(LanguageTag::new(TAGS[a]).unwrap(), LanguageTag::new(TAGS[b]).unwrap()).unwrap()
    })
}

pub fn spec() -> impl Strategy<Value = TranslationSpec> {
    (
        pair(),
        "\\PC{0,20}[^\\s\"]\\PC{0,20}",
        text(),
        proptest::option::of(Just(LanguageTag::new("en-GB").unwrap())),
        proptest::option::of(text()),
        proptest::option::of("[^\\s][\\PC\n]{0,40}"),
    )
        .prop_map(|(pair, purpose, audience, locale, register, guide)| TranslationSpec {
            pair,
            purpose,
            target_audience: audience,
            target_locale: locale,
            register,
            style_guide: guide,
        })
}

pub fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

pub fn check_spec_round_trip(spec: TranslationSpec) -> Result<(), TestCaseError> {
    let doc = serialize_spec(&spec);
    let parsed = parse_spec(&doc).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&parsed, &spec);
    prop_assert!(validate_spec(&parsed, &PromptStrategy::Baseline).is_ok());
    prop_assert_eq!(
        validate_spec(&parsed, &PromptStrategy::SpecConditioned),
        validate_spec(&parsed, &PromptStrategy::SpecConditioned)
    );
    Ok(())
}

/// Items, enumerator style, optional preamble line.
pub fn enumerated_response() -> impl Strategy<Value = (Vec<String>, usize, Option<String>)> {
    (prop::collection::vec(text(), 2..=10), 0usize..4, proptest::option::of("[A-Za-z ]{1,20}:"))
}

pub fn check_candidates_round_trip(
    (items, style, preamble): (Vec<String>, usize, Option<String>),
) -> Result<(), TestCaseError> {
    let mut raw = preamble.map(|p| format!("{p}\n")).unwrap_or_default();
    for (i, c) in items.iter().enumerate() {
        let k = i + 1;
        let enumerator = match style {
            0 => format!("{k}."),
            1 => format!("{k})"),
            2 => format!("v{k}:"),
            _ => format!("V{k}:"),
        };
        raw.push_str(&format!("{enumerator} {c}\n"));
    }
    let expected: Vec<String> = items.iter().map(|c| c.trim().to_string()).collect();
    prop_assert_eq!(parse_candidates(&raw, items.len()).map_err(|e| TestCaseError::fail(e.to_string()))?, expected);
    prop_assert!(parse_candidates(&raw, items.len() + 1).is_err());
    // n == 1 is pass-through, so only counts of 2 or more are checked below.
    if items.len() > 2 {
        prop_assert!(parse_candidates(&raw, items.len() - 1).is_err());
    }
    Ok(())
}

pub fn arbitrary_response() -> impl Strategy<Value = (String, usize)> {
    ("[\\PC\n]{0,200}", 1usize..6)
}

pub fn check_candidate_count_contract((raw, n): (String, usize)) -> Result<(), TestCaseError> {
    if let Ok(found) = parse_candidates(&raw, n) {
        prop_assert_eq!(found.len(), n);
        prop_assert!(found.iter().all(|c| !c.trim().is_empty()));
    }
    Ok(())
}

pub fn cosine_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (vector(16), vector(16), 1e-3f64..1e3)
}

pub fn check_cosine((a, b, c): (Vec<f64>, Vec<f64>, f64)) -> Result<(), TestCaseError> {
    let ea = Embedding::new(a.clone(), "m").unwrap();
    let eb = Embedding::new(b, "m").unwrap();
    let ab = cosine(&ea, &eb).unwrap();
    let ba = cosine(&eb, &ea).unwrap();
    prop_assert_eq!(ab.to_bits(), ba.to_bits());
    prop_assert!((-1.0..=1.0).contains(&ab));
    let scaled = Embedding::new(a.iter().map(|x| x * c).collect(), "m").unwrap();
    let self_sim = cosine(&ea, &scaled).unwrap();
    prop_assert!((self_sim - 1.0).abs() <= 1e-12);
    prop_assert!(self_sim <= 1.0);
    Ok(())
}

pub fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..20)
}

pub fn check_dense_rank(scores: Vec<f64>) -> Result<(), TestCaseError> {
    let ranks = dense_rank(&scores).unwrap();
    let rounded: Vec<i64> = scores.iter().map(|s| (s * 1000.0).round() as i64).collect();
    let distinct: BTreeSet<i64> = rounded.iter().copied().collect();
    prop_assert_eq!(*ranks.iter().min().unwrap(), 1);
    prop_assert_eq!(*ranks.iter().max().unwrap(), distinct.len());
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            match rounded[i].cmp(&rounded[j]) {
                std::cmp::Ordering::Equal => prop_assert_eq!(ranks[i], ranks[j]),
                std::cmp::Ordering::Greater => prop_assert!(ranks[i] < ranks[j]),
                std::cmp::Ordering::Less => prop_assert!(ranks[i] > ranks[j]),
            }
        }
    }
    Ok(())
}

pub fn ranking_case() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, u64)> {
    (vector(8), prop::collection::vec(vector(8), 1..8), any::<u64>())
}

pub fn check_permutation_equivariance(
    (source, vectors, seed): (Vec<f64>, Vec<Vec<f64>>, u64),
) -> Result<(), TestCaseError> {
    let src = Embedding::new(source, "m").unwrap();
    let candidates: Vec<(Candidate, Embedding)> = vectors
        .into_iter()
        .enumerate()
        .map(|(i, v)| (Candidate::generated(format!("v{}", i + 1), format!("t{i}")), Embedding::new(v, "m").unwrap()))
        .collect();
    let mut shuffled = candidates.clone();
    // Deterministic Fisher-Yates driven by the seed.
    let mut state = seed | 1;
    for i in (1..shuffled.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        shuffled.swap(i, (state % (i as u64 + 1)) as usize);
    }
    let by_label = |r: transpec_core::RankedReport| -> BTreeMap<String, (u64, usize)> {
        r.entries.into_iter().map(|e| (e.candidate.label, (e.score.to_bits(), e.rank))).collect()
    };
    let a = by_label(rank_candidates("s", &src, candidates).unwrap());
    let b = by_label(rank_candidates("s", &src, shuffled).unwrap());
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn prompt_case() -> impl Strategy<Value = (String, usize, usize)> {
    ("[\u{3041}-\u{3093}\u{4e00}-\u{4fff}]{1,40}", 1usize..=9, 0usize..3)
}

pub fn check_prompt((segment, n, strategy_pick): (String, usize, usize)) -> Result<(), TestCaseError> {
    let pair = LanguagePair::new(LanguageTag::new("ja").unwrap(), LanguageTag::new("en").unwrap()).unwrap();
    let spec = TranslationSpec::new(pair.clone(), "Marketing copy", "Women in their 20s");
    let strategy = match strategy_pick {
        0 => PromptStrategy::Baseline,
        1 => PromptStrategy::SpecConditioned,
        _ => PromptStrategy::default_dynamic_equivalence(&pair),
    };
    let n = if strategy_pick == 0 { 1 } else { n };
    let seg = SourceSegment::new("s", segment.clone()).unwrap();
    let first = build_prompt(&seg, &spec, &strategy, n).unwrap();
    let second = build_prompt(&seg, &spec, &strategy, n).unwrap();
    prop_assert_eq!(&first, &second);
    prop_assert_eq!(first.text.matches(segment.as_str()).count(), 1);
    prop_assert_eq!(first.n_candidates, n);
    if n > 1 {
        let directive = format!("Please generate {} translations", WORDS[n - 1]);
        prop_assert!(first.text.contains(&directive));
    }
    if strategy_pick == 1 {
        prop_assert!(first.text.contains("Marketing copy"));
        prop_assert!(first.text.contains("Women in their 20s"));
    }
    Ok(())
}
